#ifndef OPLAB_LATTICE_HPP
#define OPLAB_LATTICE_HPP

#include <cstdint>
#include <stdexcept>
#include <utility>

// Oriented lattice L = {(m,n) in Z^2 : m+n even} with edges
// (m,n) -> (m+1,n+1) and (m,n) -> (m-1,n+1), plus deterministic
// per-edge randomness (counter-based, Philox 4x32-10).

namespace oplab {

struct Site {
    int32_t m = 0;  // x-coordinate
    int32_t n = 0;  // height, n >= 0

    bool valid() const { return n >= 0 && (((m + n) & 1) == 0); }
    friend bool operator==(const Site&, const Site&) = default;
};

enum class Dir : uint8_t { NE = 0, NW = 1 };  // NE: (m+1,n+1), NW: (m-1,n+1)

struct Edge {
    Site from;
    Dir dir = Dir::NE;

    Site to() const {
        return {dir == Dir::NE ? from.m + 1 : from.m - 1, from.n + 1};
    }
    // Edge from height n has geometric midpoint height n + 1/2; this is the
    // y fed into the inhomogeneous open probability.
    double midpoint_height() const { return from.n + 0.5; }
    friend bool operator==(const Edge&, const Edge&) = default;
};

inline std::pair<Site, Site> neighbors_up(const Site& s) {
    return {Site{s.m + 1, s.n + 1}, Site{s.m - 1, s.n + 1}};
}

namespace detail {

// Philox 4x32-10 (Salmon et al., SC'11). Counter-based: the output is a pure
// function of (key, counter), so any edge's variate can be computed lazily,
// in any order, from any thread.
struct Philox4x32 {
    static constexpr uint32_t kM0 = 0xD2511F53u;
    static constexpr uint32_t kM1 = 0xCD9E8D57u;
    static constexpr uint32_t kW0 = 0x9E3779B9u;
    static constexpr uint32_t kW1 = 0xBB67AE85u;

    static inline void round(uint32_t ctr[4], const uint32_t key[2]) {
        const uint64_t p0 = static_cast<uint64_t>(kM0) * ctr[0];
        const uint64_t p1 = static_cast<uint64_t>(kM1) * ctr[2];
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
        const uint32_t lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
        const uint32_t lo1 = static_cast<uint32_t>(p1);
        const uint32_t out[4] = {hi1 ^ ctr[1] ^ key[0], lo1,
                                 hi0 ^ ctr[3] ^ key[1], lo0};
        ctr[0] = out[0];
        ctr[1] = out[1];
        ctr[2] = out[2];
        ctr[3] = out[3];
    }

    static inline void block(const uint32_t counter[4], const uint32_t key_in[2],
                             uint32_t out[4]) {
        uint32_t key[2] = {key_in[0], key_in[1]};
        for (int i = 0; i < 4; ++i) out[i] = counter[i];
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            round(out, key);
        }
    }
};

inline double to_unit_double(uint32_t hi, uint32_t lo) {
    const uint64_t v = (static_cast<uint64_t>(hi) << 32) | lo;
    return static_cast<double>(v >> 11) * 0x1.0p-53;  // [0,1)
}

}  // namespace detail

// Identifies one uniform variate: (experiment seed, replicate, edge).
struct RandomnessKey {
    uint64_t seed = 0;
    uint64_t replicate = 0;
    Edge edge;
};

// Returns the uniform(0,1) variate attached to the key. Deterministic in the
// key, independent of evaluation order and thread count.
inline double edge_uniform(const RandomnessKey& k) {
    const uint32_t key[2] = {static_cast<uint32_t>(k.seed),
                             static_cast<uint32_t>(k.seed >> 32)};
    const uint32_t counter[4] = {
        static_cast<uint32_t>(k.replicate),
        static_cast<uint32_t>(k.edge.from.m),
        (static_cast<uint32_t>(k.edge.from.n) << 1) |
            static_cast<uint32_t>(k.edge.dir),
        static_cast<uint32_t>(k.replicate >> 32)};
    uint32_t out[4];
    detail::Philox4x32::block(counter, key, out);
    return detail::to_unit_double(out[0], out[1]);
}

// Bound (seed, replicate) pair; the per-edge entry point used by the growth
// engines. Stateless apart from the key material.
class EdgeSampler {
public:
    EdgeSampler(uint64_t seed, uint64_t replicate)
        : seed_(seed), replicate_(replicate) {}

    double uniform(const Edge& e) const {
        return edge_uniform(RandomnessKey{seed_, replicate_, e});
    }
    bool open(const Edge& e, double p) const { return uniform(e) < p; }

    uint64_t seed() const { return seed_; }
    uint64_t replicate() const { return replicate_; }

private:
    uint64_t seed_;
    uint64_t replicate_;
};

}  // namespace oplab

#endif  // OPLAB_LATTICE_HPP
