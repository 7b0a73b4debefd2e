#include "oplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace oplab::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("variance needs n >= 2");
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double skewness(std::span<const double> xs) {
    const double m = mean(xs);
    const double n = static_cast<double>(xs.size());
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    return m3 / std::pow(m2, 1.5);
}

double excess_kurtosis(std::span<const double> xs) {
    const double m = mean(xs);
    const double n = static_cast<double>(xs.size());
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    return m4 / (m2 * m2) - 3.0;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty sample");
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return (n % 2 == 1) ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit needs matched samples, n >= 2");
    const double n = static_cast<double>(x.size());
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: constant x");
    LinearFit f;
    f.n = x.size();
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double ss_res = std::max(0.0, syy - f.slope * sxy);
    f.r_squared = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
    f.slope_stderr =
        (x.size() > 2) ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
    return f;
}

WindowFit best_window_fit(std::span<const double> x, std::span<const double> y,
                          size_t min_points) {
    if (min_points < 3) min_points = 3;
    if (x.size() != y.size() || x.size() < min_points)
        throw std::invalid_argument("best_window_fit: too few points");

    WindowFit best;
    best.fit.r_squared = -1.0;
    for (size_t b = 0; b + min_points <= x.size(); ++b) {
        for (size_t e = b + min_points; e <= x.size(); ++e) {
            LinearFit f = linear_fit(x.subspan(b, e - b), y.subspan(b, e - b));
            const bool better =
                f.r_squared > best.fit.r_squared + 1e-12 ||
                (std::abs(f.r_squared - best.fit.r_squared) <= 1e-12 &&
                 e - b > best.end - best.begin);
            if (better) {
                best.fit = f;
                best.begin = b;
                best.end = e;
            }
        }
    }
    return best;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation; refined with one Halley step.
double norm_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0))
        throw std::domain_error("norm_quantile needs prob in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (prob < plow) {
        const double q = std::sqrt(-2 * std::log(prob));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (prob <= phigh) {
        const double q = prob - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - prob));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    const double e = norm_cdf(x) - prob;
    const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    return x - u / (1 + x * u / 2);
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-12) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double xa = a[i], xb = b[j];
        if (xa <= xb) while (i < a.size() && a[i] == xa) ++i;
        if (xb <= xa) while (j < b.size() && b[j] == xb) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    return {d, kolmogorov_q(lambda)};
}

double ks_distance_normal(std::vector<double> xs, double mu, double sigma) {
    if (xs.empty() || sigma <= 0.0)
        throw std::invalid_argument("ks_distance_normal: bad input");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double f = norm_cdf((xs[i] - mu) / sigma);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return d;
}

std::vector<double> normality_null_table(size_t n, uint64_t seed,
                                         int null_replicates) {
    if (n < 8) throw std::invalid_argument("normality null table needs n >= 8");
    Rng rng(seed, n);
    std::vector<double> table(static_cast<size_t>(null_replicates));
    std::vector<double> sim(n);
    for (double& entry : table) {
        for (double& s : sim) s = rng.normal();
        entry = ks_distance_normal(sim, mean(sim), stddev(sim));
    }
    std::sort(table.begin(), table.end());
    return table;
}

NormalityResult normality_test(std::span<const double> xs,
                               std::span<const double> null_table) {
    if (xs.size() < 8)
        throw std::invalid_argument("normality_test needs n >= 8");
    if (null_table.empty())
        throw std::invalid_argument("normality_test: empty null table");
    std::vector<double> v(xs.begin(), xs.end());
    NormalityResult res;
    res.skewness = skewness(v);
    res.excess_kurtosis = excess_kurtosis(v);
    res.statistic = ks_distance_normal(v, mean(v), stddev(v));
    const auto it = std::lower_bound(null_table.begin(), null_table.end(),
                                     res.statistic);
    const auto ge = static_cast<double>(null_table.end() - it);
    res.p_value = (1.0 + ge) / (static_cast<double>(null_table.size()) + 1.0);
    return res;
}

NormalityResult normality_test(std::span<const double> xs, uint64_t seed,
                               int null_replicates) {
    const std::vector<double> table =
        normality_null_table(xs.size(), seed, null_replicates);
    return normality_test(xs, table);
}

double chi_square_independence(const std::vector<std::vector<int64_t>>& table,
                               int* dof_out) {
    const size_t rows = table.size();
    if (rows < 2 || table[0].size() < 2)
        throw std::invalid_argument("chi_square_independence: table too small");
    const size_t cols = table[0].size();
    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < rows; ++i) {
        if (table[i].size() != cols)
            throw std::invalid_argument("ragged contingency table");
        for (size_t j = 0; j < cols; ++j) {
            row_sum[i] += static_cast<double>(table[i][j]);
            col_sum[j] += static_cast<double>(table[i][j]);
            total += static_cast<double>(table[i][j]);
        }
    }
    double stat = 0.0;
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) {
            const double expect = row_sum[i] * col_sum[j] / total;
            if (expect > 0.0) {
                const double d = static_cast<double>(table[i][j]) - expect;
                stat += d * d / expect;
            }
        }
    if (dof_out)
        *dof_out = static_cast<int>((rows - 1) * (cols - 1));
    return stat;
}

double chi_square_quantile(double prob, double dof) {
    // Wilson–Hilferty: adequate for the large dof used here.
    const double z = norm_quantile(prob);
    const double c = 2.0 / (9.0 * dof);
    const double v = 1.0 - c + z * std::sqrt(c);
    return dof * v * v * v;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3)
        throw std::invalid_argument("pearson_correlation: bad input");
    const double mx = mean(x), my = mean(y);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

bool correlation_excludes_zero(double r, size_t n, double alpha) {
    if (n < 4) return false;
    r = std::clamp(r, -0.999999999, 0.999999999);
    const double z = std::atanh(r) * std::sqrt(static_cast<double>(n) - 3.0);
    return std::abs(z) > norm_quantile(1.0 - alpha / 2.0);
}

std::vector<double> isotonic_non_decreasing(std::span<const double> values,
                                            std::span<const double> weights) {
    const size_t n = values.size();
    if (n == 0) return {};
    if (!weights.empty() && weights.size() != n)
        throw std::invalid_argument("isotonic: weight/value size mismatch");

    struct Block {
        double sum, weight;
        size_t count;
    };
    std::vector<Block> blocks;
    blocks.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        blocks.push_back({values[i] * w, w, 1});
        while (blocks.size() >= 2) {
            const Block& b = blocks[blocks.size() - 1];
            const Block& a = blocks[blocks.size() - 2];
            if (a.sum / a.weight <= b.sum / b.weight) break;
            Block merged{a.sum + b.sum, a.weight + b.weight, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (const Block& b : blocks)
        out.insert(out.end(), b.count, b.sum / b.weight);
    return out;
}

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2)
        throw std::invalid_argument("PiecewiseLinear needs >= 2 knots");
    for (size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("PiecewiseLinear: x not strictly increasing");
}

double PiecewiseLinear::operator()(double x) const {
    if (x_.empty()) throw std::logic_error("empty interpolant");
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const size_t i = static_cast<size_t>(it - x_.begin());
    const double w = (x - x_[i - 1]) / (x_[i] - x_[i - 1]);
    return y_[i - 1] + w * (y_[i] - y_[i - 1]);
}

double Rng::uniform() {
    const uint32_t key[2] = {static_cast<uint32_t>(seed_),
                             static_cast<uint32_t>(seed_ >> 32)};
    const uint32_t counter[4] = {static_cast<uint32_t>(stream_),
                                 static_cast<uint32_t>(stream_ >> 32),
                                 static_cast<uint32_t>(counter_),
                                 static_cast<uint32_t>(counter_ >> 32)};
    ++counter_;
    uint32_t out[4];
    detail::Philox4x32::block(counter, key, out);
    return detail::to_unit_double(out[0], out[1]);
}

uint64_t Rng::integer() {
    const uint32_t key[2] = {static_cast<uint32_t>(seed_),
                             static_cast<uint32_t>(seed_ >> 32)};
    const uint32_t counter[4] = {static_cast<uint32_t>(stream_),
                                 static_cast<uint32_t>(stream_ >> 32),
                                 static_cast<uint32_t>(counter_),
                                 static_cast<uint32_t>(counter_ >> 32)};
    ++counter_;
    uint32_t out[4];
    detail::Philox4x32::block(counter, key, out);
    return (static_cast<uint64_t>(out[2]) << 32) | out[3];
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
}

double Rng::exponential(double rate) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u) / rate;
}

}  // namespace oplab::stats
