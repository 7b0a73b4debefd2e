#ifndef OPLAB_FLUCTUATIONS_HPP
#define OPLAB_FLUCTUATIONS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "oplab/estimators.hpp"
#include "oplab/poisson.hpp"
#include "oplab/shape.hpp"

// Right-edge fluctuations: samples of the normalized functional
// W(u) = (r_t(ceil(Nu)) - drift(Nu)) / sqrt(N), the predicted variances,
// Gaussianity and increment-independence checks, Kuczek break points, and
// the height-fluctuation exponent fit.

namespace oplab {

struct EdgeFunctional {
    std::vector<double> u_grid;
    double N = 0.0;
    std::vector<double> drift;  // drift(N u) per grid point
    std::vector<double> V;      // predicted Var W(u) per grid point
    // One row per surviving replicate, one column per u.
    std::vector<std::vector<double>> W;
    int64_t discarded = 0;  // replicates that died before N * max(u)
    bool variance_clamped = false;

    double discard_fraction() const {
        const auto total = static_cast<double>(W.size()) + discarded;
        return total > 0 ? discarded / total : 0.0;
    }
    std::vector<double> column(size_t u_index) const;
};

class InsufficientSurvivorsError : public std::runtime_error {
public:
    explicit InsufficientSurvivorsError(int64_t got)
        : std::runtime_error("only " + std::to_string(got) +
                             " replicates survived; need >= 50") {}
};

// drift(s) = int_0^s alpha(rho(y,t)) dy, evaluated in scaled coordinates with
// the same trapezoid rule the shape builder uses. Below the plateau it agrees
// with Gamma_t(s) up to quadrature tolerance.
double edge_drift(const PoissonParams& params, const SpeedTable& speeds,
                  double s, double quad_step = 1e-3);

// (1/N) int_0^{Nu} sigma^2(rho(y,t)) dy; sigma^2 clamps to its lowest
// tabulated p near the critical height (clamped_out reports when it did).
double predicted_variance(const PoissonParams& params, const VarianceTable& vars,
                          double u, bool* clamped_out = nullptr,
                          double quad_step = 1e-3);

EdgeFunctional sample_W(const PoissonParams& params,
                        const std::vector<double>& u_grid,
                        const SpeedTable& speeds, const VarianceTable& vars,
                        int64_t replicates, const EstimateOptions& opt);

// One-sample normality check at a fixed u (Monte Carlo Lilliefors).
// W values sit on a lattice of spacing 2/sqrt(N); lattice_spacing > 0 applies
// the standard continuity correction (uniform dither of +-spacing/2) so the
// test sees the shape rather than the discretization atoms.
stats::NormalityResult test_gaussianity(std::span<const double> w_samples,
                                        uint64_t seed = 0x6c696c6c69656673ull,
                                        int null_replicates = 2000,
                                        double lattice_spacing = 0.0);

struct IncrementPair {
    size_t first_increment = 0;
    size_t second_increment = 0;
    double correlation = 0.0;
    bool flagged = false;
};

struct IncrementReport {
    std::vector<IncrementPair> pairs;  // all pairs of disjoint increments
    bool any_flagged = false;
    size_t samples = 0;
};

IncrementReport test_increment_independence(const EdgeFunctional& samples,
                                            double alpha = 0.01);

struct BreakPointTrace {
    std::vector<int32_t> heights;    // T_i, strictly increasing
    std::vector<int32_t> positions;  // r(T_i)
    int32_t look_ahead = 0;
    int32_t scanned_heights = 0;

    // (r(T_{i+1}) - r(T_i), T_{i+1} - T_i) pairs.
    std::vector<std::pair<int32_t, int32_t>> increments() const;
};

// Break point: a height whose rightmost particle starts a cluster that
// survives the look-ahead depth, grown from the same edge variates.
// look_ahead <= 0 selects ceil(log^2) of K (homogeneous) or N (Poisson).
BreakPointTrace detect_break_points(const HomogParams& params,
                                    const EdgeSampler& sampler,
                                    int32_t look_ahead = 0);
BreakPointTrace detect_break_points(const PoissonParams& params,
                                    const EdgeSampler& sampler,
                                    double scan_fraction = 0.8,
                                    int32_t look_ahead = 0);

struct HeightFluctuationFit {
    std::vector<double> t_values;
    std::vector<double> N_values;
    std::vector<double> sd_heights;
    double b_hat = 0.0;
    double stderr_ = 0.0;
    double r_squared = 0.0;
    bool insufficient_range = false;  // max N / min N < 4
};

HeightFluctuationFit fit_height_exponent(double beta,
                                         const std::vector<double>& t_list,
                                         int64_t replicates,
                                         const EstimateOptions& opt);

// Regression core: log sd(height) against log N. Exposed so synthetic height
// samples can exercise the fit directly.
HeightFluctuationFit fit_height_exponent_samples(
    const std::vector<double>& t_values, const std::vector<double>& N_values,
    const std::vector<std::vector<double>>& heights_per_t);

}  // namespace oplab

#endif  // OPLAB_FLUCTUATIONS_HPP
