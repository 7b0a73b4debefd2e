#include "oplab/shape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oplab/poisson.hpp"

namespace oplab {

double f_scaled(double y, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(y > 0.0)) throw std::domain_error("f requires y > 0");
    return -std::expm1(-std::pow(y, -beta));
}

double y_critical(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    return std::pow(-std::log1p(-kPc), -1.0 / beta);
}

ShapeCurve::ShapeCurve(double beta, std::vector<double> y_grid,
                       std::vector<double> g_values, double y_c)
    : beta_(beta), y_c_(y_c), y_grid_(std::move(y_grid)),
      g_values_(std::move(g_values)) {
    if (y_grid_.size() != g_values_.size() || y_grid_.size() < 2)
        throw std::invalid_argument("ShapeCurve: bad grid");
    if (y_grid_.front() != 0.0 || g_values_.front() != 0.0)
        throw std::invalid_argument("ShapeCurve: g(0) = 0 required");
    for (size_t i = 1; i < g_values_.size(); ++i) {
        const double dg = g_values_[i] - g_values_[i - 1];
        const double dy = y_grid_[i] - y_grid_[i - 1];
        if (dg < -1e-12 || dg > dy + 1e-9)
            throw std::invalid_argument(
                "ShapeCurve: g must be non-decreasing and 1-Lipschitz");
    }
    interp_ = stats::PiecewiseLinear(y_grid_, g_values_);
}

double ShapeCurve::g(double y) const {
    if (y <= 0.0) return 0.0;
    if (y >= y_c_) return g_values_.back();
    return interp_(y);
}

double integrate_refined(const std::function<double(double)>& f, double a,
                         double b, double step) {
    if (!(b > a)) throw std::invalid_argument("integrate_refined: b must exceed a");
    if (!(step > 0.0)) throw std::invalid_argument("integrate_refined: step <= 0");
    double acc = 0.0;
    double y = a;
    double fy = f(a);
    const double floor_step = step / 64.0;
    while (y < b) {
        double h = step;
        // Halve the step once the endpoint is within eight steps.
        while (h > floor_step && h > (b - y) / 8.0) h *= 0.5;
        h = std::min(h, b - y);
        const double y1 = y + h;
        const double fy1 = f(y1);
        acc += 0.5 * h * (fy + fy1);
        y = y1;
        fy = fy1;
    }
    return acc;
}

ShapeCurve build_shape(double beta, const SpeedTable& speeds, double grid_step) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be > 0");
    if (speeds.p_min() > kPc + 1e-9)
        throw std::invalid_argument("SpeedTable must cover [p_c, 1]");

    const double y_c = y_critical(beta);
    // alpha(f(y)): f(0+) = 1 and f(y_c) = p_c. The table supplies the
    // endpoint values (0 at p_c when pinned); f is clamped into its domain.
    auto integrand = [&](double y) {
        const double p =
            (y <= 0.0) ? 1.0 : std::clamp(f_scaled(y, beta), kPc, 1.0);
        return speeds.alpha(p);
    };

    std::vector<double> ys{0.0}, gs{0.0};
    double y = 0.0, g = 0.0, fy = 1.0;
    const double floor_step = grid_step / 64.0;
    while (y < y_c) {
        double h = grid_step;
        while (h > floor_step && h > (y_c - y) / 8.0) h *= 0.5;
        h = std::min(h, y_c - y);
        const double y1 = std::min(y + h, y_c);
        const double fy1 = integrand(y1);
        g += 0.5 * (y1 - y) * (fy + fy1);
        ys.push_back(y1);
        gs.push_back(g);
        y = y1;
        fy = fy1;
    }
    return ShapeCurve(beta, std::move(ys), std::move(gs), y_c);
}

double envelope(const ShapeCurve& curve, double t, double k) {
    if (k < 0.0) throw std::invalid_argument("envelope: k must be >= 0");
    if (!(t > 0.0)) throw std::invalid_argument("envelope: t must be > 0");
    const double scale = std::pow(t, 1.0 / curve.beta());
    return scale * curve.g(k / scale);
}

EnvelopeReport check_envelope(const Cluster& cluster, const ShapeCurve& curve,
                              double t, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
    PoissonParams params;
    params.beta = curve.beta();
    params.t = t;
    const double N = height_scale(kPc, params);
    const auto outer_top = static_cast<int32_t>(std::floor((1.0 + eta) * N));
    const auto inner_top = static_cast<int32_t>(std::floor((1.0 - eta) * N));

    EnvelopeReport rep;
    for (int32_t k = 0; k <= outer_top; ++k) {
        const double gamma = envelope(curve, t, k);
        const bool occupied = cluster.has_level(k);
        ++rep.outer_heights;
        if (occupied) {
            const double extent =
                std::max<double>(cluster.r(k), -static_cast<double>(cluster.l(k)));
            if (extent > (1.0 + eta) * gamma) ++rep.outer_violations;
            if (k >= 1 && gamma > 0.0)
                rep.max_rel_excursion =
                    std::max(rep.max_rel_excursion, extent / gamma - 1.0);
        }
        if (k <= inner_top && occupied) {
            ++rep.inner_heights;
            const double bound = (1.0 - eta) * gamma;
            if (cluster.r(k) < bound || cluster.l(k) > -bound)
                ++rep.inner_violations;
        }
    }
    rep.inner_applicable = rep.inner_heights > 0;
    return rep;
}

}  // namespace oplab
