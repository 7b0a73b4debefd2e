#include "oplab/homog.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace oplab {

void HomogParams::validate() const {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("p must lie in [0,1]");
    if (max_height < 1)
        throw std::invalid_argument("max_height must be >= 1");
    if (geometry == SeedGeometry::HalfLine) {
        const int32_t w = effective_width();
        if (w < 2 * max_height)
            throw std::invalid_argument(
                "half-line width must be >= 2*max_height for exact truncation");
        if ((w % 2) != 0)
            throw std::invalid_argument("half-line width must be even");
    }
}

namespace {

Level seed_for(const HomogParams& params) {
    return params.geometry == SeedGeometry::Origin
               ? origin_seed()
               : half_line_seed(params.effective_width());
}

}  // namespace

Cluster grow_cluster(const HomogParams& params, const EdgeSampler& sampler) {
    params.validate();
    const double p = params.p;
    return grow_levels(
        seed_for(params), params.max_height,
        [&](const Edge& e) { return sampler.open(e, p); }, params.grow);
}

RightEdgePath right_edge(const HomogParams& params, const EdgeSampler& sampler) {
    params.validate();
    if (params.geometry != SeedGeometry::HalfLine)
        throw std::invalid_argument("right_edge requires the half-line seed");
    if (params.p <= 0.0)
        throw std::invalid_argument("right_edge requires p > 0");

    Cluster c = grow_cluster(params, sampler);
    RightEdgePath path;
    path.r.assign(static_cast<size_t>(params.max_height) + 1, std::nullopt);
    for (int32_t k = 0; k <= c.height; ++k) {
        path.r[static_cast<size_t>(k)] = c.profile[static_cast<size_t>(k)].r;
        if (c.profile[static_cast<size_t>(k)].r < -params.max_height)
            path.truncation_warning = true;
    }
    return path;
}

SurvivalSample survival_depth(const HomogParams& params, const EdgeSampler& sampler) {
    params.validate();
    Cluster c = grow_cluster(params, sampler);
    return SurvivalSample{c.height, c.censored};
}

DualResult dual_survival(const Site& w, double p, int32_t cutoff,
                         const EdgeSampler& sampler) {
    if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("p must lie in [0,1]");
    if (!w.valid()) throw std::invalid_argument("dual start site off the lattice");

    // Dual children of (x,y) sit at (x-1,y-1) and (x+1,y-1); the connecting
    // edges are the forward NE edge from (x-1,y-1) and NW edge from (x+1,y-1).
    Level cur{{Run{w.m, w.m}}};
    int32_t y = w.n;
    for (int32_t d = 0; d < cutoff; ++d) {
        if (y == 0) return {true, d};  // bottom of the lattice, still alive
        Level next;
        int32_t last = std::numeric_limits<int32_t>::min();
        for (const Run& run : cur.runs) {
            for (int32_t x = run.lo; x <= run.hi; x += 2) {
                const int32_t xl = x - 1;
                if (xl != last &&
                    sampler.open(Edge{{xl, y - 1}, Dir::NE}, p)) {
                    next.append(xl);
                    last = xl;
                }
                if (sampler.open(Edge{{x + 1, y - 1}, Dir::NW}, p)) {
                    next.append(x + 1);
                    last = x + 1;
                }
            }
        }
        if (next.empty()) return {false, d};
        cur = std::move(next);
        --y;
    }
    return {true, cutoff};
}

double ExactLaw::p_tau_ge(int32_t k) const {
    if (k <= 0) return 1.0;
    if (k > K) return 0.0;
    double s = p_reach_K;
    for (int32_t j = k; j < K; ++j) s += p_tau[static_cast<size_t>(j)];
    return s;
}

ExactLaw exact_enumeration(double p, int32_t K, SeedGeometry geometry,
                           int32_t half_line_width) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("p must lie in [0,1]");
    if (K < 1) throw std::invalid_argument("K must be >= 1");

    // Candidate sites per level: everything reachable when all edges are open.
    std::vector<std::vector<int32_t>> sites(static_cast<size_t>(K) + 1);
    if (geometry == SeedGeometry::Origin) {
        sites[0] = {0};
    } else {
        const int32_t w = half_line_width > 0 ? half_line_width : 2 * K;
        if ((w % 2) != 0)
            throw std::invalid_argument("half-line width must be even");
        for (int32_t x = -w; x <= 0; x += 2) sites[0].push_back(x);
    }
    for (int32_t k = 0; k < K; ++k) {
        const int32_t lo = sites[static_cast<size_t>(k)].front() - 1;
        const int32_t hi = sites[static_cast<size_t>(k)].back() + 1;
        for (int32_t x = lo; x <= hi; x += 2)
            sites[static_cast<size_t>(k) + 1].push_back(x);
    }

    // Edge list: (level, from index, to index).
    struct EnumEdge {
        int32_t level, from_idx, to_idx;
    };
    std::vector<EnumEdge> edges;
    for (int32_t k = 0; k < K; ++k) {
        const auto& cur = sites[static_cast<size_t>(k)];
        const auto& nxt = sites[static_cast<size_t>(k) + 1];
        const int32_t base = nxt.front();
        for (int32_t i = 0; i < static_cast<int32_t>(cur.size()); ++i) {
            const int32_t x = cur[static_cast<size_t>(i)];
            edges.push_back({k, i, (x - 1 - base) / 2});  // NW
            edges.push_back({k, i, (x + 1 - base) / 2});  // NE
        }
    }
    const int E = static_cast<int>(edges.size());
    if (E > 24)
        throw std::invalid_argument("enumeration needs " + std::to_string(E) +
                                    " edges; the oracle is limited to 24");

    // Probability of a configuration depends only on its open-edge count.
    std::vector<double> conf_prob(static_cast<size_t>(E) + 1);
    for (int j = 0; j <= E; ++j) {
        double v = 1.0;
        for (int i = 0; i < j; ++i) v *= p;
        for (int i = j; i < E; ++i) v *= (1.0 - p);
        conf_prob[static_cast<size_t>(j)] = v;
    }

    ExactLaw law;
    law.K = K;
    law.p_tau.assign(static_cast<size_t>(K), 0.0);

    std::vector<uint32_t> occ(static_cast<size_t>(K) + 1);
    const uint32_t seed_mask =
        (sites[0].size() >= 32) ? 0xFFFFFFFFu
                                : ((1u << sites[0].size()) - 1u);
    for (uint64_t mask = 0; mask < (uint64_t{1} << E); ++mask) {
        std::fill(occ.begin(), occ.end(), 0u);
        occ[0] = seed_mask;
        for (int e = 0; e < E; ++e) {
            if (!((mask >> e) & 1u)) continue;
            const EnumEdge& ed = edges[static_cast<size_t>(e)];
            if ((occ[static_cast<size_t>(ed.level)] >> ed.from_idx) & 1u)
                occ[static_cast<size_t>(ed.level) + 1] |= (1u << ed.to_idx);
        }
        int32_t tau = 0;
        for (int32_t k = K; k >= 0; --k) {
            if (occ[static_cast<size_t>(k)]) {
                tau = k;
                break;
            }
        }
        const double prob =
            conf_prob[static_cast<size_t>(std::popcount(mask))];
        if (tau == K) {
            law.p_reach_K += prob;
            const uint32_t top = occ[static_cast<size_t>(K)];
            const int hibit = 31 - std::countl_zero(top);
            law.r_K_law[sites[static_cast<size_t>(K)][static_cast<size_t>(hibit)]] += prob;
        } else {
            law.p_tau[static_cast<size_t>(tau)] += prob;
        }
    }
    return law;
}

}  // namespace oplab
