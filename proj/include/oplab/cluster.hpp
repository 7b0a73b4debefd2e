#ifndef OPLAB_CLUSTER_HPP
#define OPLAB_CLUSTER_HPP

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "oplab/lattice.hpp"

// Per-height occupied-site sets stored as sorted runs (step-2 intervals),
// the shared cluster type, and the level-by-level growth engine. Heights
// form a topological order, so growth is a frontier sweep; memory for the
// frontier is O(run count).

namespace oplab {

// Inclusive interval {lo, lo+2, ..., hi} of x-positions sharing one parity.
struct Run {
    int32_t lo = 0;
    int32_t hi = 0;
    int64_t count() const { return (static_cast<int64_t>(hi) - lo) / 2 + 1; }
    friend bool operator==(const Run&, const Run&) = default;
};

// One height's occupied set.
struct Level {
    std::vector<Run> runs;  // sorted, disjoint, gaps >= 4 between runs

    bool empty() const { return runs.empty(); }
    int32_t left() const { return runs.front().lo; }
    int32_t right() const { return runs.back().hi; }
    int64_t count() const {
        int64_t c = 0;
        for (const Run& r : runs) c += r.count();
        return c;
    }
    bool contains(int32_t x) const {
        for (const Run& r : runs)
            if (x >= r.lo && x <= r.hi) return ((x - r.lo) % 2) == 0;
        return false;
    }
    // Append in ascending order, merging into the last run when adjacent.
    void append(int32_t x) {
        if (!runs.empty() && runs.back().hi + 2 == x) {
            runs.back().hi = x;
        } else {
            runs.push_back({x, x});
        }
    }
};

struct LevelProfile {
    int32_t l = 0;   // leftmost occupied x
    int32_t r = 0;   // rightmost occupied x
    int64_t count = 0;
};

// The grown cluster. Profiles are always recorded for heights 0..height;
// full site sets are kept only when requested (keep_levels).
struct Cluster {
    std::vector<LevelProfile> profile;  // index = height k, nonempty levels only
    std::vector<Level> levels;          // empty unless keep_levels was set
    int32_t height = 0;                 // greatest occupied height
    bool censored = false;              // stopped at max height while alive
    int64_t total_sites = 0;

    bool has_level(int32_t k) const {
        return k >= 0 && k < static_cast<int32_t>(profile.size());
    }
    int32_t r(int32_t k) const { return profile[k].r; }
    int32_t l(int32_t k) const { return profile[k].l; }
};

struct GrowOptions {
    bool keep_levels = false;
    int64_t max_sites = 200'000'000;  // resource cap, not a model parameter
};

class ResourceLimitError : public std::runtime_error {
public:
    explicit ResourceLimitError(int64_t cap)
        : std::runtime_error("cluster exceeded the occupied-site cap (" +
                             std::to_string(cap) + ")") {}
};

// Grows from `seed` for at most `max_height` levels. OpenFn(edge) decides
// openness; it must be a pure function of the edge so that coupled runs
// sharing a sampler see one consistent configuration. Each relevant edge is
// evaluated at most once per run. base_height places the seed at an absolute
// lattice height: edges carry absolute from-heights, profiles stay relative.
template <class OpenFn>
Cluster grow_levels(const Level& seed, int32_t max_height, OpenFn&& open,
                    const GrowOptions& opt = {}, int32_t base_height = 0) {
    Cluster c;
    c.profile.reserve(static_cast<size_t>(max_height) + 1);
    Level cur = seed;
    if (cur.empty()) throw std::invalid_argument("empty seed level");

    constexpr int32_t kNone = std::numeric_limits<int32_t>::min();
    for (int32_t k = 0;; ++k) {
        c.profile.push_back({cur.left(), cur.right(), cur.count()});
        c.total_sites += c.profile.back().count;
        if (c.total_sites > opt.max_sites) throw ResourceLimitError(opt.max_sites);
        if (opt.keep_levels) c.levels.push_back(cur);
        c.height = k;
        if (k == max_height) {
            c.censored = true;
            break;
        }
        Level next;
        int32_t last = kNone;
        const int32_t h = base_height + k;
        for (const Run& run : cur.runs) {
            for (int32_t x = run.lo; x <= run.hi; x += 2) {
                const int32_t xl = x - 1;
                // Skip the NW edge when its endpoint is already occupied;
                // the configuration is keyed, so laziness cannot desync runs.
                if (xl != last && open(Edge{{x, h}, Dir::NW})) {
                    next.append(xl);
                    last = xl;
                }
                if (open(Edge{{x, h}, Dir::NE})) {
                    next.append(x + 1);
                    last = x + 1;
                }
            }
        }
        if (next.empty()) break;
        cur = std::move(next);
    }
    return c;
}

// Origin seed {(0,0)} or a truncated half-line {(x,0): -width <= x <= 0, x even}.
inline Level origin_seed() { return Level{{Run{0, 0}}}; }

inline Level half_line_seed(int32_t width) {
    if (width < 0 || (width % 2) != 0)
        throw std::invalid_argument("half-line width must be a nonnegative even integer");
    return Level{{Run{-width, 0}}};
}

}  // namespace oplab

#endif  // OPLAB_CLUSTER_HPP
