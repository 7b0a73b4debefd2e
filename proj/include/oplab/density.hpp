#ifndef OPLAB_DENSITY_HPP
#define OPLAB_DENSITY_HPP

#include <cstdint>
#include <vector>

#include "oplab/cluster.hpp"
#include "oplab/estimators.hpp"
#include "oplab/shape.hpp"

// Box densities: tile the plane with half-open boxes of side N^a, keep the
// boxes lying inside the shrunken region G(t,eta), and compare the occupied
// fraction D against theta(rho(y_center, t)).

namespace oplab {

struct Box {
    int32_t i = 0;
    int32_t j = 0;
    double x_center = 0.0;
    double y_center = 0.0;
    bool in_lambda = false;
};

struct BoxGrid {
    double a = 0.0;
    double side = 0.0;  // N^a
    double N = 0.0;
    double eta = 0.0;
    double t = 0.0;
    std::vector<Box> boxes;  // all boxes meeting [-N,N] x [0,N]

    int64_t lambda_count() const;
};

// Lambda membership tests all four corners against (1-eta)*Gamma_t and the
// height cap (1-eta)*N; Gamma_t is non-decreasing, so corners are exact.
BoxGrid build_grid(const ShapeCurve& curve, double t, double a, double eta);

// Independent membership predicate used to cross-check the corner test.
bool point_in_region(const ShapeCurve& curve, double t, double eta, double x,
                     double y);

struct BoxDensity {
    int32_t i = 0;
    int32_t j = 0;
    double x_center = 0.0;
    double y_center = 0.0;
    int64_t occupied = 0;
    double D = 0.0;          // occupied / side^2, paper normalization
    double D_parity = 0.0;   // 2D, comparable to theta directly
    double theta_ref = 0.0;  // theta(rho(y_center, t))
    double deviation = 0.0;  // |D_parity - theta_ref|
};

struct DensityReport {
    std::vector<BoxDensity> boxes;  // Lambda boxes only
    double sup_deviation = 0.0;
    int64_t box_count = 0;
};

// Requires a cluster grown with keep_levels at the same (beta, t).
DensityReport measure_density(const Cluster& cluster, const BoxGrid& grid,
                              const ThetaTable& theta, double beta);

}  // namespace oplab

#endif  // OPLAB_DENSITY_HPP
