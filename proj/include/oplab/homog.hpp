#ifndef OPLAB_HOMOG_HPP
#define OPLAB_HOMOG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "oplab/cluster.hpp"
#include "oplab/lattice.hpp"

// Homogeneous oriented bond percolation: cluster growth, the right edge from
// a half-line seed, survival depth, the dual (orientation-reversed) process,
// and an exact small-lattice enumeration oracle.

namespace oplab {

// Critical probability for oriented bond percolation on L.
inline constexpr double kPc = 0.64470019;

enum class SeedGeometry { Origin, HalfLine };

struct HomogParams {
    double p = 0.5;
    int32_t max_height = 1;              // K
    SeedGeometry geometry = SeedGeometry::Origin;
    int32_t half_line_width = 0;         // W; 0 means the exact default 2K
    GrowOptions grow;

    void validate() const;
    int32_t effective_width() const {
        return half_line_width > 0 ? half_line_width : 2 * max_height;
    }
};

// r(k) for k = 0..K; nullopt where the level is empty. A path moves at most
// one step right per height, so r(k+1) <= r(k) + 1 whenever both exist.
struct RightEdgePath {
    std::vector<std::optional<int32_t>> r;
    // Set when some r(k) < -K: only then could the W = 2K seed truncation
    // have differed from the infinite half-line.
    bool truncation_warning = false;
};

struct SurvivalSample {
    int32_t tau = 0;        // greatest occupied height
    bool censored = false;  // still alive at K
};

Cluster grow_cluster(const HomogParams& params, const EdgeSampler& sampler);

RightEdgePath right_edge(const HomogParams& params, const EdgeSampler& sampler);

SurvivalSample survival_depth(const HomogParams& params, const EdgeSampler& sampler);

struct DualResult {
    bool survived = false;
    int32_t depth = 0;  // levels descended before dying (when !survived)
};

// Dual cluster from w: same edge configuration, orientation reversed. Reports
// whether it stays alive for `cutoff` levels downward; hitting height 0 alive
// counts as survival (the lattice ends there).
DualResult dual_survival(const Site& w, double p, int32_t cutoff,
                         const EdgeSampler& sampler);

// Exact law of (survival depth, right edge at K) by enumerating all 2^E
// open/closed assignments. E <= 24 keeps this an oracle, not a simulator.
struct ExactLaw {
    int32_t K = 0;
    std::vector<double> p_tau;          // P(tau = k, dead at k), k = 0..K-1
    double p_reach_K = 0.0;             // P(level K nonempty)
    std::map<int32_t, double> r_K_law;  // P(r_K = x), sums to p_reach_K

    double p_tau_ge(int32_t k) const;
};

ExactLaw exact_enumeration(double p, int32_t K, SeedGeometry geometry,
                           int32_t half_line_width = 0);

}  // namespace oplab

#endif  // OPLAB_HOMOG_HPP
