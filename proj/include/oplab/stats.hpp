#ifndef OPLAB_STATS_HPP
#define OPLAB_STATS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "oplab/lattice.hpp"

// Statistical utilities shared by the estimators and the verification
// harness: moments, least squares with window selection, KS-type tests,
// a Monte Carlo Lilliefors normality test, chi-square independence,
// isotonic (PAVA) regression, and monotone piecewise-linear interpolation.

namespace oplab::stats {

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // unbiased, n-1
double stddev(std::span<const double> xs);
double skewness(std::span<const double> xs);
double excess_kurtosis(std::span<const double> xs);
double median(std::vector<double> xs);  // by value: sorts a copy

// Ordinary least squares y = intercept + slope*x.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    size_t n = 0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Best contiguous window of at least min_points by R^2; ties go to the
// longer window. Returns the fit plus the chosen [begin, end) index range.
struct WindowFit {
    LinearFit fit;
    size_t begin = 0;
    size_t end = 0;
};
WindowFit best_window_fit(std::span<const double> x, std::span<const double> y,
                          size_t min_points);

// Standard normal CDF and quantile.
double norm_cdf(double z);
double norm_quantile(double prob);

// Kolmogorov distribution tail Q(lambda) = 2*sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
// Two-sample KS test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample KS distance against a normal with the given parameters.
double ks_distance_normal(std::vector<double> xs, double mu, double sigma);

// Normality test with parameters estimated from the sample. The null
// distribution of the statistic is built by Monte Carlo (Lilliefors), so the
// p-value is calibrated by construction. Deterministic for a fixed seed.
struct NormalityResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};
// Sorted null distribution of the statistic at sample size n; reusable
// across tests of the same size.
std::vector<double> normality_null_table(size_t n,
                                         uint64_t seed = 0x6c696c6c69656673ull,
                                         int null_replicates = 2000);
NormalityResult normality_test(std::span<const double> xs,
                               std::span<const double> null_table);
NormalityResult normality_test(std::span<const double> xs,
                               uint64_t seed = 0x6c696c6c69656673ull,
                               int null_replicates = 2000);

// Chi-square statistic for independence on an r x c contingency table,
// plus the Wilson–Hilferty approximation to the chi-square quantile.
double chi_square_independence(const std::vector<std::vector<int64_t>>& table,
                               int* dof_out = nullptr);
double chi_square_quantile(double prob, double dof);

double pearson_correlation(std::span<const double> x, std::span<const double> y);
// Flags |r| whose Fisher-z confidence interval at the given level excludes 0.
bool correlation_excludes_zero(double r, size_t n, double alpha);

// Pool-adjacent-violators: weighted least-squares non-decreasing fit.
std::vector<double> isotonic_non_decreasing(std::span<const double> values,
                                            std::span<const double> weights = {});

// Piecewise-linear interpolation through (x, y) with x strictly increasing;
// clamps outside the range. Monotone inputs give a monotone interpolant.
class PiecewiseLinear {
public:
    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    bool empty() const { return x_.empty(); }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

private:
    std::vector<double> x_, y_;
};

// Deterministic stream RNG for analysis-side randomness (synthetic inputs,
// Monte Carlo null distributions). Philox-backed, so streams keyed by
// (seed, stream) never collide with the edge-variate streams.
class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0)
        : seed_(seed ^ 0xa5a5a5a5deadbeefull), stream_(stream) {}

    double uniform();                    // [0,1)
    double normal();                     // standard normal
    double exponential(double rate = 1.0);
    uint64_t integer();                  // full 64-bit

private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace oplab::stats

#endif  // OPLAB_STATS_HPP
