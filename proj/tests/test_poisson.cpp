#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oplab/parallel.hpp"
#include "oplab/poisson.hpp"
#include "oplab/stats.hpp"

using namespace oplab;

namespace {

bool cluster_subset(const Cluster& small, const Cluster& big) {
    if (small.levels.size() > big.levels.size()) return false;
    for (size_t k = 0; k < small.levels.size(); ++k)
        for (const Run& run : small.levels[k].runs)
            for (int32_t x = run.lo; x <= run.hi; x += 2)
                if (!big.levels[k].contains(x)) return false;
    return true;
}

}  // namespace

TEST_CASE("rho endpoints and the Fig.-2 scale") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 0.0;
    CHECK(rho(5.0, params) == 0.0);

    params.t = 10.0;
    CHECK(rho(1e-9, params) == doctest::Approx(1.0));
    CHECK_THROWS_AS(rho(0.0, params), std::domain_error);
    CHECK_THROWS_AS(rho(-1.0, params), std::domain_error);

    params.beta = 0.5;
    params.t = 30.0;
    const double v = rho(841.0, params);
    CHECK(v == doctest::Approx(1.0 - std::exp(-30.0 / 29.0)).epsilon(1e-12));
    CHECK(std::abs(v - kPc) < 5e-4);
}

TEST_CASE("rho is decreasing in y and increasing in t") {
    PoissonParams params;
    params.beta = 0.7;
    params.t = 12.0;
    double prev = 1.0;
    for (double y = 0.5; y < 200.0; y *= 1.7) {
        const double v = rho(y, params);
        CHECK(v < prev);
        prev = v;
    }
    PoissonParams later = params;
    later.t = 13.0;
    for (double y = 0.5; y < 200.0; y *= 1.7)
        CHECK(rho(y, later) > rho(y, params));
}

TEST_CASE("height scale matches the caption value and the exact identity") {
    PoissonParams params;
    params.beta = 0.5;
    params.t = 30.0;
    CHECK(std::abs(height_scale(kPc, params) - 839.0) <= 3.0);

    // beta = 1, p = 1 - 1/e: N = t exactly.
    PoissonParams unit;
    unit.beta = 1.0;
    unit.t = 17.25;
    CHECK(height_scale(1.0 - std::exp(-1.0), unit) ==
          doctest::Approx(17.25).epsilon(1e-12));

    // c_{p,beta} identity on a deterministic grid of (p, beta).
    stats::Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        const double p = 0.05 + 0.9 * rng.uniform();
        const double beta = 0.3 + 2.0 * rng.uniform();
        const double t = 1.0 + 50.0 * rng.uniform();
        PoissonParams pp;
        pp.beta = beta;
        pp.t = t;
        const double lhs = height_scale(p, pp) / std::pow(t, 1.0 / beta);
        const double rhs = std::pow(-std::log1p(-p), -1.0 / beta);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    CHECK_THROWS_AS(height_scale(0.0, params), std::domain_error);
    CHECK_THROWS_AS(height_scale(1.0, params), std::domain_error);
}

TEST_CASE("t = 0 leaves the origin alone") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 0.0;
    const Cluster c = grow_poisson_cluster(params, EdgeSampler(1, 0));
    CHECK(c.height == 0);
    CHECK(c.total_sites == 1);
}

TEST_CASE("height overshoot above N shrinks with t and stays below 2N") {
    // Finite-size form of the height bound: the band above N is near-critical,
    // so the overshoot is large at desk scale but decays as t grows.
    const int64_t reps = 200;
    double prev_p95 = 1e9;
    for (double t : {100.0, 200.0, 400.0}) {
        PoissonParams params;
        params.beta = 1.0;
        params.t = t;
        const double N = height_scale(kPc, params);
        auto ratios = parallel_map<double>(reps, 4, [&](size_t i) {
            const Cluster c = grow_poisson_cluster(params, EdgeSampler(31, i));
            REQUIRE_FALSE(c.censored);  // never reaches the default 2N cap
            return static_cast<double>(c.height) / N;
        });
        std::sort(ratios.begin(), ratios.end());
        const double p95 = ratios[static_cast<size_t>(0.95 * reps)];
        CHECK(p95 < prev_p95);
        CHECK(ratios.back() < 2.0);
        prev_p95 = p95;
    }
}

TEST_CASE("solid kernel: everything within |x| <= y <= t^(b/beta) is occupied") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 200.0;
    params.grow.keep_levels = true;
    const auto n = static_cast<int32_t>(std::pow(params.t, 0.5));  // b = 1/2
    const int64_t reps = 200;
    const auto solid = parallel_map<int>(reps, 4, [&](size_t i) {
        const Cluster c = grow_poisson_cluster(params, EdgeSampler(33, i));
        if (c.height < n) return 0;
        for (int32_t k = 0; k <= n; ++k)
            for (int32_t x = -k; x <= k; x += 2)
                if (!c.levels[static_cast<size_t>(k)].contains(x)) return 0;
        return 1;
    });
    int64_t ok = 0;
    for (int s : solid) ok += s;
    CHECK(static_cast<double>(ok) / reps >= 0.95);
}

TEST_CASE("monotone in t under shared uniforms") {
    PoissonParams lo, hi;
    lo.beta = hi.beta = 1.0;
    lo.t = 50.0;
    hi.t = 80.0;
    lo.grow.keep_levels = hi.grow.keep_levels = true;
    // A common cap keeps level indices comparable.
    lo.max_height_cap = hi.max_height_cap = hi.effective_cap();
    for (uint64_t rep = 0; rep < 30; ++rep) {
        EdgeSampler sampler(44, rep);
        const Cluster a = grow_poisson_cluster(lo, sampler);
        const Cluster b = grow_poisson_cluster(hi, sampler);
        REQUIRE(cluster_subset(a, b));
    }
}

TEST_CASE("strip sandwich between homogeneous processes") {
    // Within a strip, growth from the same seed level is bounded by the
    // homogeneous processes at the strip's extreme probabilities when all
    // three share uniforms.
    PoissonParams params;
    params.beta = 1.0;
    params.t = 150.0;
    params.grow.keep_levels = true;

    for (uint64_t rep = 0; rep < 10; ++rep) {
        EdgeSampler sampler(55, rep);
        const Cluster c = grow_poisson_cluster(params, sampler);
        for (int32_t k1 : {10, 40, 80}) {
            const int32_t span = 25;
            if (c.height < k1) continue;
            const Level& seed = c.levels[static_cast<size_t>(k1)];
            const double p_minus = rho(k1 + span - 1 + 0.5, params);
            const double p_plus = rho(k1 + 0.5, params);

            GrowOptions keep;
            keep.keep_levels = true;
            const double t = params.t;
            const double beta = params.beta;
            auto open_poisson = [&](const Edge& e) {
                return sampler.uniform(e) <
                       -std::expm1(-t * std::pow(e.from.n + 0.5, -beta));
            };
            const Cluster mid = grow_levels(seed, span, open_poisson, keep, k1);
            const Cluster low = grow_levels(
                seed, span,
                [&](const Edge& e) { return sampler.open(e, p_minus); }, keep, k1);
            const Cluster high = grow_levels(
                seed, span,
                [&](const Edge& e) { return sampler.open(e, p_plus); }, keep, k1);
            REQUIRE(cluster_subset(low, mid));
            REQUIRE(cluster_subset(mid, high));
        }
    }
}

TEST_CASE("r and -l have the same law (reflection symmetry)") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 100.0;
    const auto k_star = static_cast<int32_t>(
        std::floor(0.5 * height_scale(kPc, params)));
    const int64_t reps = 500;
    struct RL {
        double r = 0.0, minus_l = 0.0;
        bool alive = false;
    };
    const auto draws = parallel_map<RL>(reps, 4, [&](size_t i) {
        const Cluster c = grow_poisson_cluster(params, EdgeSampler(66, i));
        if (c.height < k_star) return RL{};
        return RL{static_cast<double>(c.r(k_star)),
                  static_cast<double>(-c.l(k_star)), true};
    });
    std::vector<double> rs, ls;
    for (const RL& d : draws) {
        if (!d.alive) continue;
        rs.push_back(d.r);
        ls.push_back(d.minus_l);
    }
    REQUIRE(rs.size() > 300);
    CHECK(stats::ks_two_sample(rs, ls).p_value > 0.01);
}

TEST_CASE("dual membership proxy: trivial cases") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 1e6;
    CHECK(dual_membership_estimate(Site{1, 1}, params, 1, EdgeSampler(1, 0)));
    params.t = 0.0;
    CHECK_FALSE(dual_membership_estimate(Site{2, 2}, params, 1, EdgeSampler(1, 0)));
}

TEST_CASE("dual membership proxy agrees with exact membership in the bulk") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 400.0;
    params.grow.keep_levels = true;
    const double N = height_scale(kPc, params);
    const double eta = 0.3;
    const auto cutoff = static_cast<int32_t>(
        std::ceil(std::pow(std::log(N), 2.0)));

    EdgeSampler sampler(77, 0);
    const Cluster c = grow_poisson_cluster(params, sampler);
    REQUIRE(c.height >= static_cast<int32_t>((1.0 - eta) * N));

    // Sample sites uniformly from the simple bulk wedge |x| <= (1-eta) * min(y, N - y)
    // intersected with heights [1, (1-eta)N]; these sit inside G(t, eta').
    stats::Rng rng(78);
    int64_t agree = 0, total = 0;
    while (total < 300) {
        const auto y = static_cast<int32_t>(1 + rng.uniform() * (1.0 - eta) * N);
        const double half = (1.0 - eta) * std::min<double>(y, N - y);
        auto x = static_cast<int32_t>(std::floor((2.0 * rng.uniform() - 1.0) * half));
        if (((x + y) & 1) != 0) ++x;
        if (std::abs(x) > half) continue;
        ++total;
        const bool exact = c.has_level(y) &&
                           c.levels[static_cast<size_t>(y)].contains(x);
        const bool proxy =
            dual_membership_estimate(Site{x, y}, params, cutoff, sampler);
        if (exact == proxy) ++agree;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.98);
}

TEST_CASE("growth caps are reported as censoring, not errors") {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 300.0;
    params.max_height_cap = 20;  // far below N
    const Cluster c = grow_poisson_cluster(params, EdgeSampler(9, 0));
    CHECK(c.censored);
    CHECK(c.height == 20);
}
