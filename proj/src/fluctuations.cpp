#include "oplab/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oplab/parallel.hpp"

namespace oplab {

std::vector<double> EdgeFunctional::column(size_t u_index) const {
    std::vector<double> col;
    col.reserve(W.size());
    for (const auto& row : W) col.push_back(row.at(u_index));
    return col;
}

double edge_drift(const PoissonParams& params, const SpeedTable& speeds,
                  double s, double quad_step) {
    params.validate();
    if (s < 0.0) throw std::invalid_argument("drift: s must be >= 0");
    if (s == 0.0) return 0.0;
    const double scale = std::pow(params.t, 1.0 / params.beta);
    const double y_c = y_critical(params.beta);
    const double upper = s / scale;
    if (upper > y_c + 1e-12)
        throw std::invalid_argument("drift: height is past the critical scale");
    auto integrand = [&](double z) {
        const double p =
            (z <= 0.0) ? 1.0 : std::clamp(f_scaled(z, params.beta), kPc, 1.0);
        return speeds.alpha(p);
    };
    return scale * integrate_refined(integrand, 0.0, upper, quad_step);
}

double predicted_variance(const PoissonParams& params, const VarianceTable& vars,
                          double u, bool* clamped_out, double quad_step) {
    params.validate();
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("predicted_variance: u must lie in (0,1)");
    const double N = height_scale(kPc, params);
    const double scale = std::pow(params.t, 1.0 / params.beta);
    const double upper = u * N / scale;
    bool clamped = false;
    auto integrand = [&](double z) {
        const double p = (z <= 0.0) ? 1.0 : std::min(1.0, f_scaled(z, params.beta));
        if (vars.clamped(p)) clamped = true;
        return vars.sigma2(p);
    };
    const double integral = scale * integrate_refined(integrand, 0.0, upper, quad_step);
    if (clamped_out) *clamped_out = clamped;
    return integral / N;
}

EdgeFunctional sample_W(const PoissonParams& params,
                        const std::vector<double>& u_grid,
                        const SpeedTable& speeds, const VarianceTable& vars,
                        int64_t replicates, const EstimateOptions& opt) {
    params.validate();
    if (u_grid.empty()) throw std::invalid_argument("sample_W: empty u grid");
    for (size_t i = 0; i < u_grid.size(); ++i) {
        if (!(u_grid[i] > 0.0 && u_grid[i] < 1.0))
            throw std::invalid_argument("sample_W: u must lie in (0,1)");
        if (i > 0 && u_grid[i] <= u_grid[i - 1])
            throw std::invalid_argument("sample_W: u grid must increase");
    }
    if (replicates < 100)
        throw std::invalid_argument("sample_W: need >= 100 replicates");

    EdgeFunctional out;
    out.u_grid = u_grid;
    out.N = height_scale(kPc, params);

    std::vector<int32_t> k_of_u;
    for (double u : u_grid)
        k_of_u.push_back(static_cast<int32_t>(std::ceil(out.N * u)));
    const int32_t k_max = k_of_u.back();

    for (double u : u_grid) {
        out.drift.push_back(edge_drift(params, speeds, out.N * u));
        bool clamped = false;
        out.V.push_back(predicted_variance(params, vars, u, &clamped));
        out.variance_clamped = out.variance_clamped || clamped;
    }

    PoissonParams grow_params = params;
    if (grow_params.max_height_cap == 0)
        grow_params.max_height_cap = grow_params.effective_cap();

    const double sqrt_N = std::sqrt(out.N);
    const unsigned workers = opt.workers == 0 ? default_workers() : opt.workers;
    const auto rows = parallel_map<std::vector<double>>(
        static_cast<size_t>(replicates), workers, [&](size_t i) {
            EdgeSampler sampler(opt.seed, opt.replicate_offset + i);
            const Cluster c = grow_poisson_cluster(grow_params, sampler);
            std::vector<double> row;
            if (c.height < k_max) return row;  // died too early; discarded
            row.reserve(u_grid.size());
            for (size_t j = 0; j < u_grid.size(); ++j) {
                const int32_t k = k_of_u[j];
                row.push_back(
                    (static_cast<double>(c.r(k)) - out.drift[j]) / sqrt_N);
            }
            return row;
        });

    for (const auto& row : rows) {
        if (row.empty())
            ++out.discarded;
        else
            out.W.push_back(row);
    }
    if (static_cast<int64_t>(out.W.size()) < 50)
        throw InsufficientSurvivorsError(static_cast<int64_t>(out.W.size()));
    return out;
}

stats::NormalityResult test_gaussianity(std::span<const double> w_samples,
                                        uint64_t seed, int null_replicates,
                                        double lattice_spacing) {
    if (w_samples.size() < 100)
        throw std::invalid_argument("test_gaussianity: need >= 100 samples");
    if (lattice_spacing <= 0.0)
        return stats::normality_test(w_samples, seed, null_replicates);
    std::vector<double> dithered(w_samples.begin(), w_samples.end());
    stats::Rng rng(seed ^ 0x6a69747465726564ull);
    for (double& v : dithered)
        v += (rng.uniform() - 0.5) * lattice_spacing;
    return stats::normality_test(dithered, seed, null_replicates);
}

IncrementReport test_increment_independence(const EdgeFunctional& samples,
                                            double alpha) {
    const size_t grid = samples.u_grid.size();
    if (grid < 3)
        throw std::invalid_argument("increment test needs >= 3 grid points");
    if (samples.W.size() < 100)
        throw std::invalid_argument("increment test needs >= 100 samples");

    const size_t n_inc = grid - 1;
    std::vector<std::vector<double>> inc(n_inc);
    for (const auto& row : samples.W)
        for (size_t i = 0; i < n_inc; ++i)
            inc[i].push_back(row[i + 1] - row[i]);

    IncrementReport report;
    report.samples = samples.W.size();
    for (size_t i = 0; i < n_inc; ++i) {
        for (size_t j = i + 1; j < n_inc; ++j) {
            IncrementPair pair;
            pair.first_increment = i;
            pair.second_increment = j;
            pair.correlation = stats::pearson_correlation(inc[i], inc[j]);
            pair.flagged = stats::correlation_excludes_zero(
                pair.correlation, report.samples, alpha);
            report.any_flagged = report.any_flagged || pair.flagged;
            report.pairs.push_back(pair);
        }
    }
    return report;
}

std::vector<std::pair<int32_t, int32_t>> BreakPointTrace::increments() const {
    std::vector<std::pair<int32_t, int32_t>> out;
    for (size_t i = 1; i < heights.size(); ++i)
        out.push_back({positions[i] - positions[i - 1],
                       heights[i] - heights[i - 1]});
    return out;
}

namespace {

int32_t default_look_ahead(double n) {
    const double l = std::log(std::max(2.0, n));
    return static_cast<int32_t>(std::ceil(l * l));
}

// Scans the recorded right edge; a height qualifies when the forward cluster
// of its rightmost particle, grown from the shared variates, stays alive for
// the look-ahead depth. Survival == censoring at that depth.
template <class OpenFn>
BreakPointTrace scan_break_points(const Cluster& cluster, int32_t scan_max,
                                  int32_t look_ahead, OpenFn&& open) {
    BreakPointTrace trace;
    trace.look_ahead = look_ahead;
    GrowOptions opts;  // look-ahead clusters are small; default cap is fine
    const int32_t top = std::min(scan_max, cluster.height);
    trace.scanned_heights = top >= 0 ? top + 1 : 0;
    for (int32_t k = 0; k <= top; ++k) {
        const int32_t r = cluster.r(k);
        const Cluster probe = grow_levels(Level{{Run{r, r}}}, look_ahead, open,
                                          opts, k);
        if (probe.censored) {
            trace.heights.push_back(k);
            trace.positions.push_back(r);
        }
    }
    return trace;
}

}  // namespace

BreakPointTrace detect_break_points(const HomogParams& params,
                                    const EdgeSampler& sampler,
                                    int32_t look_ahead) {
    params.validate();
    if (look_ahead <= 0) look_ahead = default_look_ahead(params.max_height);
    const Cluster cluster = grow_cluster(params, sampler);
    const double p = params.p;
    // Scan only heights whose look-ahead window fits below the growth cap.
    return scan_break_points(
        cluster, params.max_height - look_ahead, look_ahead,
        [&](const Edge& e) { return sampler.open(e, p); });
}

BreakPointTrace detect_break_points(const PoissonParams& params,
                                    const EdgeSampler& sampler,
                                    double scan_fraction, int32_t look_ahead) {
    params.validate();
    if (!(scan_fraction > 0.0 && scan_fraction < 1.0))
        throw std::invalid_argument("scan_fraction must lie in (0,1)");
    const double N = height_scale(kPc, params);
    if (look_ahead <= 0) look_ahead = default_look_ahead(N);
    const Cluster cluster = grow_poisson_cluster(params, sampler);
    const double t = params.t;
    const double beta = params.beta;
    auto open = [&, last_k = int32_t(-1), last_prob = 0.0](const Edge& e) mutable {
        if (e.from.n != last_k) {
            last_k = e.from.n;
            last_prob = -std::expm1(-t * std::pow(last_k + 0.5, -beta));
        }
        return sampler.uniform(e) < last_prob;
    };
    return scan_break_points(
        cluster, static_cast<int32_t>(std::floor(scan_fraction * N)),
        look_ahead, open);
}

HeightFluctuationFit fit_height_exponent_samples(
    const std::vector<double>& t_values, const std::vector<double>& N_values,
    const std::vector<std::vector<double>>& heights_per_t) {
    if (t_values.size() < 4 || N_values.size() != t_values.size() ||
        heights_per_t.size() != t_values.size())
        throw std::invalid_argument("height-exponent fit needs >= 4 matched t values");

    HeightFluctuationFit fit;
    fit.t_values = t_values;
    fit.N_values = N_values;
    std::vector<double> log_N, log_sd;
    for (size_t i = 0; i < N_values.size(); ++i) {
        fit.sd_heights.push_back(stats::stddev(heights_per_t[i]));
        log_N.push_back(std::log(N_values[i]));
        log_sd.push_back(std::log(fit.sd_heights.back()));
    }
    const stats::LinearFit lf = stats::linear_fit(log_N, log_sd);
    fit.b_hat = lf.slope;
    fit.stderr_ = lf.slope_stderr;
    fit.r_squared = lf.r_squared;
    const auto [mn, mx] =
        std::minmax_element(fit.N_values.begin(), fit.N_values.end());
    fit.insufficient_range = (*mx / *mn) < 4.0;
    return fit;
}

HeightFluctuationFit fit_height_exponent(double beta,
                                         const std::vector<double>& t_list,
                                         int64_t replicates,
                                         const EstimateOptions& opt) {
    if (t_list.size() < 4)
        throw std::invalid_argument("height-exponent fit needs >= 4 t values");
    if (replicates < 10)
        throw std::invalid_argument("height-exponent fit needs >= 10 replicates");

    std::vector<double> N_values;
    std::vector<std::vector<double>> heights_per_t;
    const unsigned workers = opt.workers == 0 ? default_workers() : opt.workers;
    for (double t : t_list) {
        PoissonParams params;
        params.beta = beta;
        params.t = t;
        const double N = height_scale(kPc, params);
        // The overshoot above N is wide at small t; 3N keeps the height
        // samples uncensored.
        params.max_height_cap = static_cast<int32_t>(std::ceil(3.0 * N));
        heights_per_t.push_back(parallel_map<double>(
            static_cast<size_t>(replicates), workers, [&](size_t i) {
                EdgeSampler sampler(opt.seed, opt.replicate_offset + i);
                return static_cast<double>(
                    grow_poisson_cluster(params, sampler).height);
            }));
        N_values.push_back(N);
    }
    return fit_height_exponent_samples(t_list, N_values, heights_per_t);
}

}  // namespace oplab
