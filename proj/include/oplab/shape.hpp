#ifndef OPLAB_SHAPE_HPP
#define OPLAB_SHAPE_HPP

#include <functional>
#include <vector>

#include "oplab/cluster.hpp"
#include "oplab/estimators.hpp"

// The limit shape: f(y) = 1 - exp(-y^-beta), the critical scaled height y_c
// with f(y_c) = p_c, and g built by integrating g'(y) = alpha(f(y)) on
// [0, y_c] with g constant beyond. The scaled envelope is
// Gamma_t(y) = t^(1/beta) * g(y / t^(1/beta)).

namespace oplab {

double f_scaled(double y, double beta);

// (-log(1-p_c))^(-1/beta), the solution of f(y_c) = p_c.
double y_critical(double beta);

class ShapeCurve {
public:
    ShapeCurve() = default;
    ShapeCurve(double beta, std::vector<double> y_grid, std::vector<double> g_values,
               double y_c);

    double beta() const { return beta_; }
    double y_c() const { return y_c_; }
    double g(double y) const;  // constant extension beyond y_c
    double g_at_yc() const { return g_values_.back(); }
    const std::vector<double>& y_grid() const { return y_grid_; }
    const std::vector<double>& g_values() const { return g_values_; }

private:
    double beta_ = 1.0;
    double y_c_ = 0.0;
    std::vector<double> y_grid_;
    std::vector<double> g_values_;
    stats::PiecewiseLinear interp_;
};

// Composite trapezoid for int_a^b F dy with the grid geometrically refined
// (factor 2, floor step/64) toward b, where alpha(f(y)) steepens into its
// zero at y_c. Shared by the shape builder and the drift integral.
double integrate_refined(const std::function<double(double)>& f, double a,
                         double b, double step);

// g by trapezoidal integration of alpha(f(y)); alpha comes from the table's
// monotone interpolation with its pinned endpoints.
ShapeCurve build_shape(double beta, const SpeedTable& speeds, double grid_step);

double envelope(const ShapeCurve& curve, double t, double k);

struct EnvelopeReport {
    // Outer: r/l within +-(1+eta)*Gamma for heights k <= (1+eta)N.
    int64_t outer_heights = 0;
    int64_t outer_violations = 0;
    // Inner: r >= (1-eta)*Gamma and l <= -(1-eta)*Gamma for occupied heights
    // k <= (1-eta)N; empty levels are not applicable.
    int64_t inner_heights = 0;
    int64_t inner_violations = 0;
    bool inner_applicable = false;
    double max_rel_excursion = 0.0;  // max of max(r,-l)/Gamma - 1 over k >= 1

    double outer_violation_fraction() const {
        return outer_heights ? static_cast<double>(outer_violations) / outer_heights : 0.0;
    }
    double inner_violation_fraction() const {
        return inner_heights ? static_cast<double>(inner_violations) / inner_heights : 0.0;
    }
};

EnvelopeReport check_envelope(const Cluster& cluster, const ShapeCurve& curve,
                              double t, double eta);

}  // namespace oplab

#endif  // OPLAB_SHAPE_HPP
