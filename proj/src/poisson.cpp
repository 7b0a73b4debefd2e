#include "oplab/poisson.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oplab {

void PoissonParams::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
    if (max_height_cap < 0)
        throw std::invalid_argument("max_height_cap must be >= 0");
}

int32_t PoissonParams::effective_cap() const {
    if (max_height_cap > 0) return max_height_cap;
    if (t <= 0.0) return 1;
    const double cap = 2.0 * height_scale(kPc, *this);
    return static_cast<int32_t>(std::ceil(std::max(1.0, cap)));
}

double rho(double y, const PoissonParams& params) {
    params.validate();
    if (!(y > 0.0))
        throw std::domain_error("rho requires a midpoint height y > 0");
    return -std::expm1(-params.t * std::pow(y, -params.beta));
}

double height_scale(double p, const PoissonParams& params) {
    if (!(params.beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(params.t > 0.0)) throw std::domain_error("height_scale requires t > 0");
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("height_scale requires p in (0,1)");
    return std::pow(params.t / (-std::log1p(-p)), 1.0 / params.beta);
}

Cluster grow_poisson_cluster(const PoissonParams& params, const EdgeSampler& sampler) {
    params.validate();
    const double t = params.t;
    const double beta = params.beta;
    const int32_t cap = params.effective_cap();
    // All edges leaving height k share the midpoint k + 1/2; cache per level.
    auto open = [&, last_k = int32_t(-1), last_prob = 0.0](const Edge& e) mutable {
        if (e.from.n != last_k) {
            last_k = e.from.n;
            last_prob = -std::expm1(-t * std::pow(last_k + 0.5, -beta));
        }
        return sampler.uniform(e) < last_prob;
    };
    return grow_levels(origin_seed(), cap, open, params.grow);
}

bool dual_membership_estimate(const Site& w, const PoissonParams& params,
                              int32_t cutoff, const EdgeSampler& sampler) {
    params.validate();
    if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    if (!w.valid()) throw std::invalid_argument("site off the lattice");

    const double t = params.t;
    const double beta = params.beta;
    auto open = [&, last_k = int32_t(-1), last_prob = 0.0](const Edge& e) mutable {
        if (e.from.n != last_k) {
            last_k = e.from.n;
            last_prob = -std::expm1(-t * std::pow(last_k + 0.5, -beta));
        }
        return sampler.uniform(e) < last_prob;
    };

    Level cur{{Run{w.m, w.m}}};
    int32_t y = w.n;
    for (int32_t d = 0; d < cutoff; ++d) {
        if (y == 0) return true;
        Level next;
        int32_t last = std::numeric_limits<int32_t>::min();
        for (const Run& run : cur.runs) {
            for (int32_t x = run.lo; x <= run.hi; x += 2) {
                const int32_t xl = x - 1;
                if (xl != last && open(Edge{{xl, y - 1}, Dir::NE})) {
                    next.append(xl);
                    last = xl;
                }
                if (open(Edge{{x + 1, y - 1}, Dir::NW})) {
                    next.append(x + 1);
                    last = x + 1;
                }
            }
        }
        if (next.empty()) return false;
        cur = std::move(next);
        --y;
    }
    return true;
}

}  // namespace oplab
