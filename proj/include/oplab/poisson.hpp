#ifndef OPLAB_POISSON_HPP
#define OPLAB_POISSON_HPP

#include <cstdint>

#include "oplab/cluster.hpp"
#include "oplab/homog.hpp"
#include "oplab/lattice.hpp"

// The inhomogeneous process: an edge with midpoint height y is open at time t
// with probability rho(y,t) = 1 - exp(-t*y^-beta). Height-dependent growth of
// the origin cluster, the height scale n(p,t), and the dual-membership proxy.

namespace oplab {

struct PoissonParams {
    double beta = 1.0;
    double t = 0.0;
    // Growth stops here; 0 means the default 2*height_scale(p_c, t). Overflow
    // is reported through Cluster::censored, not as an error.
    int32_t max_height_cap = 0;
    GrowOptions grow;

    void validate() const;
    int32_t effective_cap() const;
};

double rho(double y, const PoissonParams& params);

// Exact real solution of rho(y,t) = p, i.e. (t / -log(1-p))^(1/beta).
// N = height_scale(p_c, t) throughout.
double height_scale(double p, const PoissonParams& params);

Cluster grow_poisson_cluster(const PoissonParams& params, const EdgeSampler& sampler);

// Fast membership proxy: does the dual cluster from w, run with the
// height-dependent probabilities, survive `cutoff` levels downward? Reaching
// height 0 alive counts as survival.
bool dual_membership_estimate(const Site& w, const PoissonParams& params,
                              int32_t cutoff, const EdgeSampler& sampler);

}  // namespace oplab

#endif  // OPLAB_POISSON_HPP
