#include "oplab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oplab/parallel.hpp"
#include "oplab/poisson.hpp"

namespace oplab {

namespace {

unsigned workers_of(const EstimateOptions& opt) {
    return opt.workers == 0 ? default_workers() : opt.workers;
}

// Batch-means standard error; falls back to the plain formula for tiny runs.
double batch_means_stderr(const std::vector<double>& xs) {
    const size_t n = xs.size();
    if (n < 2) return 0.0;
    const size_t batches = std::min<size_t>(20, n);
    if (batches < 2 || n < 2 * batches)
        return stats::stddev(xs) / std::sqrt(static_cast<double>(n));
    const size_t per = n / batches;
    std::vector<double> bm;
    bm.reserve(batches);
    for (size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (size_t i = b * per; i < (b + 1) * per; ++i) s += xs[i];
        bm.push_back(s / static_cast<double>(per));
    }
    return stats::stddev(bm) / std::sqrt(static_cast<double>(batches));
}

std::vector<TableRow> pinned(std::vector<TableRow> rows, double p_lo,
                             double v_lo, double p_hi, double v_hi) {
    auto has = [&](double p) {
        return std::any_of(rows.begin(), rows.end(),
                           [&](const TableRow& r) { return r.p == p; });
    };
    if (!has(p_lo)) rows.push_back({p_lo, v_lo, 0.0, 0, 0});
    if (!has(p_hi)) rows.push_back({p_hi, v_hi, 0.0, 0, 0});
    std::sort(rows.begin(), rows.end(),
              [](const TableRow& a, const TableRow& b) { return a.p < b.p; });
    for (TableRow& r : rows) {
        if (r.p == p_lo) r.value = v_lo;
        if (r.p == p_hi) r.value = v_hi;
    }
    return rows;
}

void isotonic_rows(std::vector<TableRow>& rows) {
    std::vector<double> v, w;
    v.reserve(rows.size());
    w.reserve(rows.size());
    for (const TableRow& r : rows) {
        v.push_back(r.value);
        // Pinned rows (stderr 0) act as hard anchors.
        w.push_back(r.stderr_ > 0.0 ? 1.0 / (r.stderr_ * r.stderr_) : 1e12);
    }
    const std::vector<double> fit = stats::isotonic_non_decreasing(v, w);
    for (size_t i = 0; i < rows.size(); ++i) rows[i].value = fit[i];
}

stats::PiecewiseLinear interp_of(const std::vector<TableRow>& rows) {
    std::vector<double> x, y;
    x.reserve(rows.size());
    y.reserve(rows.size());
    for (const TableRow& r : rows) {
        if (!x.empty() && r.p <= x.back()) continue;  // dedupe equal p
        x.push_back(r.p);
        y.push_back(r.value);
    }
    return stats::PiecewiseLinear(std::move(x), std::move(y));
}

}  // namespace

SpeedTable::SpeedTable(std::vector<TableRow> rows, bool pin_endpoints) {
    if (rows.empty()) throw std::invalid_argument("SpeedTable: no rows");
    rows_ = pin_endpoints ? pinned(std::move(rows), kPc, 0.0, 1.0, 1.0)
                          : std::move(rows);
    std::sort(rows_.begin(), rows_.end(),
              [](const TableRow& a, const TableRow& b) { return a.p < b.p; });
    isotonic_rows(rows_);
    interp_ = interp_of(rows_);
}

double SpeedTable::alpha(double p) const {
    if (p < kPc - 1e-12)
        throw std::domain_error("alpha(p) tabulated only for p >= p_c");
    return interp_(std::min(p, 1.0));
}

double SpeedTable::p_min() const { return rows_.front().p; }

ThetaTable::ThetaTable(std::vector<TableRow> rows, bool pin_endpoints) {
    if (rows.empty()) throw std::invalid_argument("ThetaTable: no rows");
    rows_ = pin_endpoints ? pinned(std::move(rows), kPc, 0.0, 1.0, 1.0)
                          : std::move(rows);
    std::sort(rows_.begin(), rows_.end(),
              [](const TableRow& a, const TableRow& b) { return a.p < b.p; });
    isotonic_rows(rows_);
    interp_ = interp_of(rows_);
}

double ThetaTable::theta(double p) const {
    if (p <= kPc) return 0.0;
    return interp_(std::min(p, 1.0));
}

VarianceTable::VarianceTable(std::vector<TableRow> rows, bool pin_endpoints) {
    if (rows.empty()) throw std::invalid_argument("VarianceTable: no rows");
    rows_ = std::move(rows);
    if (pin_endpoints) {
        const bool has_one = std::any_of(
            rows_.begin(), rows_.end(), [](const TableRow& r) { return r.p == 1.0; });
        if (!has_one) rows_.push_back({1.0, 0.0, 0.0, 0, 0});
        for (TableRow& r : rows_)
            if (r.p == 1.0) r.value = 0.0;
    }
    std::sort(rows_.begin(), rows_.end(),
              [](const TableRow& a, const TableRow& b) { return a.p < b.p; });
    interp_ = interp_of(rows_);
}

double VarianceTable::sigma2(double p) const {
    // Clamped on both sides; sigma^2 is not assumed monotone.
    return interp_(p);
}

bool VarianceTable::clamped(double p) const { return p < rows_.front().p; }

AlphaEstimate estimate_alpha(double p, int32_t K, int64_t replicates,
                             const EstimateOptions& opt) {
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (p == 1.0) return {1.0, 0.0, replicates, 0.0};
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("estimate_alpha needs p in (0,1]");

    HomogParams params;
    params.p = p;
    params.max_height = K;
    params.geometry = SeedGeometry::HalfLine;

    struct Draw {
        double value = 0.0;
        bool empty_level = false;
    };
    const auto draws = parallel_map<Draw>(
        static_cast<size_t>(replicates), workers_of(opt), [&](size_t i) {
            EdgeSampler sampler(opt.seed, opt.replicate_offset + i);
            const RightEdgePath path = right_edge(params, sampler);
            const auto& rK = path.r[static_cast<size_t>(K)];
            if (!rK.has_value()) return Draw{0.0, true};
            return Draw{static_cast<double>(*rK) / K, false};
        });

    std::vector<double> xs;
    xs.reserve(draws.size());
    int64_t empty = 0;
    for (const Draw& d : draws) {
        if (d.empty_level)
            ++empty;
        else
            xs.push_back(d.value);
    }
    if (xs.empty())
        throw std::runtime_error("estimate_alpha: every replicate lost level K");
    AlphaEstimate est;
    est.alpha_hat = stats::mean(xs);
    est.stderr_ = batch_means_stderr(xs);
    est.used_replicates = static_cast<int64_t>(xs.size());
    est.empty_level_fraction = static_cast<double>(empty) / static_cast<double>(replicates);
    return est;
}

ThetaEstimate estimate_theta(double p, int32_t K, int64_t replicates,
                             const EstimateOptions& opt) {
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (p == 1.0) return {1.0, 0.0, 1.0};

    // One pass to 2K measures survival at K and 2K on the same configurations.
    HomogParams params;
    params.p = p;
    params.max_height = 2 * K;

    struct Draw {
        bool past_K = false;
        bool past_2K = false;
    };
    const auto draws = parallel_map<Draw>(
        static_cast<size_t>(replicates), workers_of(opt), [&](size_t i) {
            EdgeSampler sampler(opt.seed, opt.replicate_offset + i);
            const Cluster c = grow_cluster(params, sampler);
            return Draw{c.height >= K, c.censored};
        });

    int64_t nK = 0, n2K = 0;
    for (const Draw& d : draws) {
        nK += d.past_K;
        n2K += d.past_2K;
    }
    const double n = static_cast<double>(replicates);
    ThetaEstimate est;
    est.theta_hat = static_cast<double>(nK) / n;
    est.theta_hat_2K = static_cast<double>(n2K) / n;
    est.stderr_ = std::sqrt(est.theta_hat * (1.0 - est.theta_hat) / n);
    return est;
}

Sigma2Estimate estimate_sigma2(double p, int32_t K, int64_t replicates,
                               const EstimateOptions& opt) {
    if (replicates < 3) throw std::invalid_argument("replicates must be >= 3");
    if (p == 1.0) return {0.0, 0.0, false};
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("estimate_sigma2 needs p in (0,1]");

    HomogParams params;
    params.p = p;
    params.max_height = K;
    params.geometry = SeedGeometry::HalfLine;

    const auto draws = parallel_map<double>(
        static_cast<size_t>(replicates), workers_of(opt), [&](size_t i) {
            EdgeSampler sampler(opt.seed, opt.replicate_offset + i);
            const RightEdgePath path = right_edge(params, sampler);
            const auto& rK = path.r[static_cast<size_t>(K)];
            return rK.has_value() ? static_cast<double>(*rK)
                                  : std::nan("");
        });

    std::vector<double> xs;
    xs.reserve(draws.size());
    for (double d : draws)
        if (!std::isnan(d)) xs.push_back(d);
    const auto R = static_cast<double>(xs.size());
    if (xs.size() < 3)
        throw std::runtime_error("estimate_sigma2: too few surviving replicates");

    const double m = stats::mean(xs);
    double s2c = 0.0;
    for (double x : xs) s2c += (x - m) * (x - m);

    Sigma2Estimate est;
    est.sigma2_hat = s2c / (R - 1.0) / K;
    est.near_critical_warning = p < kPc + 0.05;

    // Jackknife over replicates.
    std::vector<double> loo;
    loo.reserve(xs.size());
    for (double x : xs) {
        const double s2_i = s2c - (x - m) * (x - m) * R / (R - 1.0);
        loo.push_back(s2_i / (R - 2.0) / K);
    }
    const double lm = stats::mean(loo);
    double acc = 0.0;
    for (double v : loo) acc += (v - lm) * (v - lm);
    est.stderr_ = std::sqrt((R - 1.0) / R * acc);
    return est;
}

namespace {

// Log-linear tail fit over the best-R^2 contiguous window of at least 8
// points, restricted to tail counts large enough for a stable logarithm.
TailFit fit_exponential_tail(const std::vector<int64_t>& tail_counts,
                             int64_t total, int64_t min_count,
                             const char* label) {
    std::vector<double> ks, logp;
    for (size_t k = 0; k < tail_counts.size(); ++k) {
        if (tail_counts[k] < min_count) break;  // tail counts are decreasing
        ks.push_back(static_cast<double>(k));
        logp.push_back(std::log(static_cast<double>(tail_counts[k]) /
                                static_cast<double>(total)));
    }
    if (ks.size() < 8)
        throw FitRejectedError(std::string(label) +
                               ": too few usable tail points");
    const stats::WindowFit wf = stats::best_window_fit(ks, logp, 8);
    if (wf.fit.r_squared < 0.9)
        throw FitRejectedError(std::string(label) + ": best window R^2 " +
                               std::to_string(wf.fit.r_squared) + " < 0.9");
    TailFit fit;
    fit.rate = -wf.fit.slope;
    fit.r_squared = wf.fit.r_squared;
    fit.window_begin = static_cast<size_t>(ks[wf.begin]);
    fit.window_end = static_cast<size_t>(ks[wf.end - 1]) + 1;
    fit.samples = total;
    return fit;
}

}  // namespace

TailRates estimate_tail_rates(double p, int32_t K, int64_t replicates,
                              const EstimateOptions& opt,
                              bool allow_supercritical) {
    if (replicates < 100)
        throw std::invalid_argument("tail estimation needs >= 100 replicates");
    const bool supercritical = p > kPc;
    if (supercritical && !allow_supercritical)
        throw std::invalid_argument(
            "supercritical tails condition on rare finite clusters; pass the "
            "explicit flag to accept the sampling cost");

    HomogParams params;
    params.p = p;
    params.max_height = K;

    struct Draw {
        int32_t tau = 0;
        int32_t extent = 0;
        bool censored = false;
    };
    const auto draws = parallel_map<Draw>(
        static_cast<size_t>(replicates), workers_of(opt), [&](size_t i) {
            EdgeSampler sampler(opt.seed, opt.replicate_offset + i);
            const Cluster c = grow_cluster(params, sampler);
            int32_t extent = 0;
            for (const LevelProfile& lp : c.profile)
                extent = std::max(extent, lp.r);
            return Draw{c.height, extent, c.censored};
        });

    // Finite-cluster conditioning: in the supercritical branch only clusters
    // that died before K enter the tails.
    std::vector<Draw> finite;
    finite.reserve(draws.size());
    for (const Draw& d : draws)
        if (!d.censored) finite.push_back(d);
    if (supercritical &&
        finite.size() < std::max<size_t>(1000, static_cast<size_t>(replicates) / 100))
        throw FitRejectedError(
            "supercritical tails: too few finite clusters sampled (" +
            std::to_string(finite.size()) + ")");
    // Censored clusters may be infinite, so they are excluded from the
    // finite-tail statistics in both branches; subcritical runs essentially
    // never censor at the recommended K.
    const std::vector<Draw>& pool = finite;

    std::vector<int64_t> tau_tail(static_cast<size_t>(K) + 1, 0);
    int32_t max_extent = 0;
    for (const Draw& d : pool) max_extent = std::max(max_extent, d.extent);
    std::vector<int64_t> ext_tail(static_cast<size_t>(max_extent) + 2, 0);
    for (const Draw& d : pool) {
        for (int32_t k = 0; k <= d.tau; ++k) ++tau_tail[static_cast<size_t>(k)];
        for (int32_t x = 0; x <= d.extent; ++x) ++ext_tail[static_cast<size_t>(x)];
    }

    TailRates rates;
    const auto total = static_cast<int64_t>(pool.size());
    rates.parallel = fit_exponential_tail(tau_tail, total, 10, "gamma_parallel");
    rates.perp = fit_exponential_tail(ext_tail, total, 10, "gamma_perp");
    rates.L_par = 1.0 / rates.parallel.rate;
    rates.L_perp = 1.0 / rates.perp.rate;
    return rates;
}

ExponentFit fit_critical_exponent(const std::vector<std::pair<double, double>>& p_and_L,
                                  double p_c) {
    if (p_and_L.size() < 4)
        throw std::invalid_argument("fit_critical_exponent needs >= 4 points");
    std::vector<double> x, y;
    for (const auto& [p, L] : p_and_L) {
        if (p == p_c || L <= 0.0)
            throw std::invalid_argument("fit_critical_exponent: bad point");
        x.push_back(-std::log(std::abs(p - p_c)));
        y.push_back(std::log(L));
    }
    const stats::LinearFit f = stats::linear_fit(x, y);
    return {f.slope, f.slope_stderr, f.r_squared};
}

std::vector<double> default_p_grid() {
    return {0.66, 0.68, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 1.0};
}

SpeedTable build_speed_table(const std::vector<double>& grid, int32_t K,
                             int64_t replicates, const EstimateOptions& opt) {
    std::vector<TableRow> rows;
    for (double p : grid) {
        const AlphaEstimate e = estimate_alpha(p, K, replicates, opt);
        rows.push_back({p, e.alpha_hat, e.stderr_, K, e.used_replicates});
    }
    return SpeedTable(std::move(rows));
}

ThetaTable build_theta_table(const std::vector<double>& grid, int32_t K,
                             int64_t replicates, const EstimateOptions& opt) {
    std::vector<TableRow> rows;
    for (double p : grid) {
        const ThetaEstimate e = estimate_theta(p, K, replicates, opt);
        rows.push_back({p, e.theta_hat, e.stderr_, K, replicates});
    }
    return ThetaTable(std::move(rows));
}

VarianceTable build_variance_table(const std::vector<double>& grid, int32_t K,
                                   int64_t replicates, const EstimateOptions& opt) {
    std::vector<TableRow> rows;
    for (double p : grid) {
        const Sigma2Estimate e = estimate_sigma2(p, K, replicates, opt);
        rows.push_back({p, e.sigma2_hat, e.stderr_, K, replicates});
    }
    return VarianceTable(std::move(rows));
}

}  // namespace oplab
