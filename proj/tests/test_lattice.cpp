#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "oplab/lattice.hpp"
#include "oplab/stats.hpp"

using namespace oplab;

TEST_CASE("neighbors_up follows the oriented edge rule") {
    auto [ne, nw] = neighbors_up({0, 0});
    CHECK(ne == Site{1, 1});
    CHECK(nw == Site{-1, 1});

    auto [ne2, nw2] = neighbors_up({-1, 1});
    CHECK(ne2 == Site{0, 2});
    CHECK(nw2 == Site{-2, 2});

    auto [ne3, nw3] = neighbors_up({3, 5});
    CHECK(ne3 == Site{4, 6});
    CHECK(nw3 == Site{2, 6});
}

TEST_CASE("parity is closed under random upward walks") {
    stats::Rng rng(42);
    for (int walk = 0; walk < 1000; ++walk) {
        Site s{0, 0};
        for (int step = 0; step < 100; ++step) {
            const auto [ne, nw] = neighbors_up(s);
            s = (rng.uniform() < 0.5) ? ne : nw;
            REQUIRE(s.valid());
        }
    }
}

TEST_CASE("edge endpoints and midpoints") {
    const Edge e{{2, 4}, Dir::NW};
    CHECK(e.to() == Site{1, 5});
    CHECK(e.to().valid());
    CHECK(e.midpoint_height() == doctest::Approx(4.5));
}

TEST_CASE("edge_uniform is deterministic in its key") {
    const RandomnessKey key{123456789ull, 42ull, Edge{{-7, 3}, Dir::NE}};
    const double u1 = edge_uniform(key);
    const double u2 = edge_uniform(key);
    CHECK(u1 == u2);
    CHECK(u1 >= 0.0);
    CHECK(u1 < 1.0);

    // Any single field flips the value.
    RandomnessKey k2 = key;
    k2.seed ^= 1;
    CHECK(edge_uniform(k2) != u1);
    RandomnessKey k3 = key;
    k3.replicate += 1;
    CHECK(edge_uniform(k3) != u1);
    RandomnessKey k4 = key;
    k4.edge.dir = Dir::NW;
    CHECK(edge_uniform(k4) != u1);
    RandomnessKey k5 = key;
    k5.edge.from.m += 2;
    CHECK(edge_uniform(k5) != u1);
}

TEST_CASE("edge uniforms have the right mean") {
    EdgeSampler sampler(2024, 0);
    double sum = 0.0;
    int64_t n = 0;
    for (int32_t x = -500; x <= 500; ++x) {
        for (int32_t k = 0; k < 500; ++k) {
            if (((x + k) & 1) != 0) continue;
            sum += sampler.uniform(Edge{{x, k}, Dir::NE});
            sum += sampler.uniform(Edge{{x, k}, Dir::NW});
            n += 2;
        }
    }
    CHECK(n > 400000);
    CHECK(std::abs(sum / n - 0.5) < 0.002);
}

TEST_CASE("NE and NW streams of one site are independent (chi-square)") {
    // 10^5 pairs binned 10x10; independence not rejected at 1%.
    EdgeSampler sampler(7, 1);
    std::vector<std::vector<int64_t>> table(10, std::vector<int64_t>(10, 0));
    int64_t pairs = 0;
    for (int32_t x = -400; x <= 400 && pairs < 100000; ++x) {
        for (int32_t k = 0; k < 250 && pairs < 100000; ++k) {
            if (((x + k) & 1) != 0) continue;
            const double a = sampler.uniform(Edge{{x, k}, Dir::NE});
            const double b = sampler.uniform(Edge{{x, k}, Dir::NW});
            table[static_cast<size_t>(a * 10)][static_cast<size_t>(b * 10)]++;
            ++pairs;
        }
    }
    CHECK(pairs == 100000);
    int dof = 0;
    const double stat = stats::chi_square_independence(table, &dof);
    CHECK(dof == 81);
    CHECK(stat < stats::chi_square_quantile(0.99, dof));
}

TEST_CASE("replicates give distinct but reproducible streams") {
    const Edge e{{0, 0}, Dir::NE};
    std::set<double> values;
    for (uint64_t rep = 0; rep < 100; ++rep)
        values.insert(EdgeSampler(1, rep).uniform(e));
    CHECK(values.size() == 100);
}
