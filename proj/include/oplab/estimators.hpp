#ifndef OPLAB_ESTIMATORS_HPP
#define OPLAB_ESTIMATORS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oplab/homog.hpp"
#include "oplab/stats.hpp"

// Monte Carlo estimation of the homogeneous-percolation constants the limit
// theorems are phrased in: the edge speed alpha(p), the percolation
// probability theta(p), the edge-variance rate sigma^2(p), exponential tail
// rates (correlation lengths), and the critical exponents fitted from them.

namespace oplab {

// Literature values for the directed-percolation correlation-length
// exponents; used for the consistency arithmetic, never fed into estimates.
inline constexpr double kNuParallel = 1.733847;
inline constexpr double kNuPerp = 2.193708 / 2.0;

struct EstimateOptions {
    uint64_t seed = 1;
    uint64_t replicate_offset = 0;
    unsigned workers = 0;  // 0: hardware concurrency
};

struct TableRow {
    double p = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    int32_t K = 0;
    int64_t replicates = 0;
};

// Sampled alpha(p) with pinned endpoints alpha(p_c)=0, alpha(1)=1; values
// are isotonic-corrected before interpolation (monotone in p by coupling).
class SpeedTable {
public:
    SpeedTable() = default;
    explicit SpeedTable(std::vector<TableRow> rows, bool pin_endpoints = true);

    double alpha(double p) const;
    const std::vector<TableRow>& rows() const { return rows_; }
    double p_min() const;

private:
    std::vector<TableRow> rows_;
    stats::PiecewiseLinear interp_;
};

class ThetaTable {
public:
    ThetaTable() = default;
    explicit ThetaTable(std::vector<TableRow> rows, bool pin_endpoints = true);

    double theta(double p) const;  // 0 below p_c
    const std::vector<TableRow>& rows() const { return rows_; }

private:
    std::vector<TableRow> rows_;
    stats::PiecewiseLinear interp_;
};

// sigma^2(p) on a supercritical grid; queries below the grid clamp to the
// smallest tabulated p (sigma^2 likely diverges at p_c) and can be detected
// via clamped().
class VarianceTable {
public:
    VarianceTable() = default;
    explicit VarianceTable(std::vector<TableRow> rows, bool pin_endpoints = true);

    double sigma2(double p) const;
    bool clamped(double p) const;
    const std::vector<TableRow>& rows() const { return rows_; }

private:
    std::vector<TableRow> rows_;
    stats::PiecewiseLinear interp_;
};

struct AlphaEstimate {
    double alpha_hat = 0.0;
    double stderr_ = 0.0;
    int64_t used_replicates = 0;
    double empty_level_fraction = 0.0;  // warn-worthy when > 1%
};

// Mean of r_K/K over replicates (half-line seed, exact W = 2K truncation);
// stderr via batch means. alpha(1) short-circuits to exactly (1, 0).
AlphaEstimate estimate_alpha(double p, int32_t K, int64_t replicates,
                             const EstimateOptions& opt);

struct ThetaEstimate {
    double theta_hat = 0.0;
    double stderr_ = 0.0;
    // Survival fraction at 2K from a half-budget rerun; the gap reports the
    // censoring bias qualitatively.
    double theta_hat_2K = 0.0;
};

ThetaEstimate estimate_theta(double p, int32_t K, int64_t replicates,
                             const EstimateOptions& opt);

struct Sigma2Estimate {
    double sigma2_hat = 0.0;
    double stderr_ = 0.0;  // jackknife over replicates
    bool near_critical_warning = false;
};

Sigma2Estimate estimate_sigma2(double p, int32_t K, int64_t replicates,
                               const EstimateOptions& opt);

class FitRejectedError : public std::runtime_error {
public:
    explicit FitRejectedError(const std::string& what)
        : std::runtime_error(what) {}
};

struct TailFit {
    double rate = 0.0;       // decay per level
    double r_squared = 0.0;
    size_t window_begin = 0;  // fitted k-range
    size_t window_end = 0;
    int64_t samples = 0;
};

struct TailRates {
    TailFit parallel;   // P(n <= tau < infinity) ~ exp(-gamma_par * n)
    TailFit perp;       // P(R0 >= n) ~ exp(-gamma_perp * n)
    double L_par = 0.0;
    double L_perp = 0.0;
};

// Subcritical by default. The supercritical branch conditions on finite
// clusters (rare events) and must be requested explicitly; it throws when
// too few finite clusters were seen.
TailRates estimate_tail_rates(double p, int32_t K, int64_t replicates,
                              const EstimateOptions& opt,
                              bool allow_supercritical = false);

struct ExponentFit {
    double nu_hat = 0.0;
    double stderr_ = 0.0;
    double r_squared = 0.0;
};

// Slope of log L against -log|p - p_c|.
ExponentFit fit_critical_exponent(const std::vector<std::pair<double, double>>& p_and_L,
                                  double p_c = kPc);

// Default supercritical grid; resolves the steep region above p_c.
std::vector<double> default_p_grid();

// Assembles an isotonic-corrected table over a p-grid by running the given
// estimator at each p with shared replicate keys.
SpeedTable build_speed_table(const std::vector<double>& grid, int32_t K,
                             int64_t replicates, const EstimateOptions& opt);
ThetaTable build_theta_table(const std::vector<double>& grid, int32_t K,
                             int64_t replicates, const EstimateOptions& opt);
VarianceTable build_variance_table(const std::vector<double>& grid, int32_t K,
                                   int64_t replicates, const EstimateOptions& opt);

}  // namespace oplab

#endif  // OPLAB_ESTIMATORS_HPP
