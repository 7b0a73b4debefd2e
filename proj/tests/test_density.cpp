#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "oplab/density.hpp"
#include "oplab/poisson.hpp"
#include "oplab/stats.hpp"

using namespace oplab;

namespace {

SpeedTable linear_alpha_table() {
    std::vector<TableRow> rows;
    for (double p = 0.66; p <= 0.999; p += 0.002)
        rows.push_back({p, (p - kPc) / (1.0 - kPc), 0.0, 0, 0});
    return SpeedTable(std::move(rows));
}

ThetaTable unit_theta_table() {
    // theta == 1 everywhere above p_c; enough for exact-count cross-checks.
    return ThetaTable(
        std::vector<TableRow>{{kPc + 1e-6, 1.0, 0.0, 0, 0}, {1.0, 1.0, 0.0, 0, 0}},
        /*pin_endpoints=*/false);
}

}  // namespace

TEST_CASE("lambda membership agrees with an independent point test") {
    const ShapeCurve curve = build_shape(0.5, linear_alpha_table(), 1e-3);
    const double t = 30.0;
    const BoxGrid grid = build_grid(curve, t, 0.7, 0.25);
    CHECK(grid.lambda_count() > 0);

    stats::Rng rng(12);
    for (const Box& box : grid.boxes) {
        if (!box.in_lambda) continue;
        // Interior points of a contained box are in the region.
        for (int s = 0; s < 50; ++s) {
            const double x = (box.i + rng.uniform()) * grid.side;
            const double y = (box.j + rng.uniform()) * grid.side;
            REQUIRE(point_in_region(curve, t, 0.25, x, y));
        }
    }
    // Boxes that fail the corner test have some corner outside.
    for (const Box& box : grid.boxes) {
        if (box.in_lambda) continue;
        bool some_corner_out = false;
        for (const auto& [cx, cy] :
             {std::pair{box.i * grid.side, box.j * grid.side},
              {(box.i + 1) * grid.side, box.j * grid.side},
              {box.i * grid.side, (box.j + 1) * grid.side},
              {(box.i + 1) * grid.side, (box.j + 1) * grid.side}}) {
            if (!point_in_region(curve, t, 0.25, cx, cy)) some_corner_out = true;
        }
        CHECK(some_corner_out);
    }
}

TEST_CASE("the region pinches at the bottom, so j = 0 boxes are outside") {
    const ShapeCurve curve = build_shape(0.5, linear_alpha_table(), 1e-3);
    const BoxGrid grid = build_grid(curve, 30.0, 0.7, 0.1);
    for (const Box& box : grid.boxes)
        if (box.j == 0) CHECK_FALSE(box.in_lambda);
}

TEST_CASE("eta near 1 empties Lambda") {
    const ShapeCurve curve = build_shape(0.5, linear_alpha_table(), 1e-3);
    const BoxGrid grid = build_grid(curve, 30.0, 0.7, 0.97);
    CHECK(grid.lambda_count() == 0);
    CHECK_THROWS_AS(build_grid(curve, 30.0, 0.4, 0.25), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(curve, 30.0, 0.7, 1.5), std::invalid_argument);
}

TEST_CASE("box counts partition the cluster sites exactly") {
    const ShapeCurve curve = build_shape(0.5, linear_alpha_table(), 1e-3);
    const double t = 30.0;
    PoissonParams params;
    params.beta = 0.5;
    params.t = t;
    params.grow.keep_levels = true;
    const Cluster cluster = grow_poisson_cluster(params, EdgeSampler(5, 0));
    const BoxGrid grid = build_grid(curve, t, 0.7, 0.25);
    const DensityReport report =
        measure_density(cluster, grid, unit_theta_table(), params.beta);

    // Brute-force recount per Lambda box.
    const double S = grid.side;
    for (const BoxDensity& b : report.boxes) {
        int64_t count = 0;
        for (int32_t k = 0; k < static_cast<int32_t>(cluster.levels.size()); ++k) {
            if (static_cast<int32_t>(std::floor(k / S)) != b.j) continue;
            for (const Run& run : cluster.levels[static_cast<size_t>(k)].runs)
                for (int32_t x = run.lo; x <= run.hi; x += 2)
                    if (static_cast<int32_t>(std::floor(x / S)) == b.i) ++count;
        }
        REQUIRE(count == b.occupied);
    }
}

TEST_CASE("a parity-saturated block gives D = 1/2 and zero deviation vs theta = 1") {
    // Full block: every lattice site with |x| <= 400, 0 <= k <= 400.
    Cluster full;
    for (int32_t k = 0; k <= 400; ++k) {
        const int32_t lo = (k % 2 == 0) ? -400 : -399;
        const int32_t hi = (k % 2 == 0) ? 400 : 399;
        full.levels.push_back(Level{{Run{lo, hi}}});
        full.profile.push_back({lo, hi, full.levels.back().count()});
        full.total_sites += full.profile.back().count;
    }
    full.height = 400;

    BoxGrid grid;
    grid.a = 0.7;
    grid.side = 50.0;
    grid.N = 400.0;
    grid.eta = 0.25;
    grid.t = 1e9;  // rho ~ 1 at every box center
    grid.boxes = {Box{0, 0, 25.0, 25.0, true}, Box{-2, 3, -75.0, 175.0, true}};

    const DensityReport rep =
        measure_density(full, grid, unit_theta_table(), 1.0);
    REQUIRE(rep.boxes.size() == 2);
    for (const BoxDensity& b : rep.boxes) {
        CHECK(b.D == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(b.D_parity == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b.theta_ref == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(b.deviation < 1e-9);
    }
    CHECK(rep.sup_deviation < 1e-9);
}

TEST_CASE("boxes above the extinction height read zero density") {
    Cluster tiny;
    tiny.levels.push_back(Level{{Run{0, 0}}});
    tiny.profile.push_back({0, 0, 1});
    tiny.total_sites = 1;
    tiny.height = 0;

    BoxGrid grid;
    grid.a = 0.7;
    grid.side = 10.0;
    grid.N = 100.0;
    grid.eta = 0.25;
    grid.t = 50.0;
    grid.boxes = {Box{0, 3, 5.0, 35.0, true}};
    const ThetaTable theta = unit_theta_table();
    const DensityReport rep = measure_density(tiny, grid, theta, 1.0);
    REQUIRE(rep.boxes.size() == 1);
    CHECK(rep.boxes[0].occupied == 0);
    CHECK(rep.boxes[0].D == 0.0);
    // Deviation is then exactly the reference.
    PoissonParams params;
    params.beta = 1.0;
    params.t = 50.0;
    CHECK(rep.boxes[0].deviation ==
          doctest::Approx(theta.theta(rho(35.0, params))));
}

TEST_CASE("theta reference is non-increasing in the box row") {
    const ShapeCurve curve = build_shape(0.5, linear_alpha_table(), 1e-3);
    const double t = 30.0;
    PoissonParams params;
    params.beta = 0.5;
    params.t = t;
    params.grow.keep_levels = true;
    const Cluster cluster = grow_poisson_cluster(params, EdgeSampler(6, 0));
    const BoxGrid grid = build_grid(curve, t, 0.7, 0.25);
    // A theta table with a real slope.
    std::vector<TableRow> rows;
    for (double p = 0.66; p <= 1.0; p += 0.02)
        rows.push_back({p, (p - kPc) / (1 - kPc), 0.0, 0, 0});
    const DensityReport rep =
        measure_density(cluster, grid, ThetaTable(std::move(rows)), params.beta);
    std::map<int32_t, double> theta_by_row;
    for (const BoxDensity& b : rep.boxes) theta_by_row[b.j] = b.theta_ref;
    double prev = 2.0;
    for (const auto& [j, th] : theta_by_row) {
        CHECK(th <= prev + 1e-12);
        prev = th;
    }
}

TEST_CASE("measure_density requires kept levels") {
    const ShapeCurve curve = build_shape(0.5, linear_alpha_table(), 1e-3);
    PoissonParams params;
    params.beta = 0.5;
    params.t = 30.0;
    const Cluster profile_only = grow_poisson_cluster(params, EdgeSampler(7, 0));
    const BoxGrid grid = build_grid(curve, 30.0, 0.7, 0.25);
    CHECK_THROWS_AS(
        measure_density(profile_only, grid, unit_theta_table(), 0.5),
        std::invalid_argument);
}
