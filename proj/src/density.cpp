#include "oplab/density.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "oplab/poisson.hpp"

namespace oplab {

int64_t BoxGrid::lambda_count() const {
    int64_t c = 0;
    for (const Box& b : boxes) c += b.in_lambda;
    return c;
}

bool point_in_region(const ShapeCurve& curve, double t, double eta, double x,
                     double y) {
    PoissonParams params;
    params.beta = curve.beta();
    params.t = t;
    const double N = height_scale(kPc, params);
    if (y < 0.0 || y > (1.0 - eta) * N) return false;
    return std::abs(x) <= (1.0 - eta) * envelope(curve, t, y);
}

BoxGrid build_grid(const ShapeCurve& curve, double t, double a, double eta) {
    if (!(a > 0.5 && a < 1.0))
        throw std::invalid_argument("box exponent a must lie in (1/2, 1)");
    if (!(eta > 0.0 && eta < 1.0))
        throw std::invalid_argument("eta must lie in (0, 1)");

    PoissonParams params;
    params.beta = curve.beta();
    params.t = t;
    const double N = height_scale(kPc, params);
    const double S = std::pow(N, a);

    BoxGrid grid;
    grid.a = a;
    grid.side = S;
    grid.N = N;
    grid.eta = eta;
    grid.t = t;

    const auto i_lo = static_cast<int32_t>(std::floor(-N / S)) - 1;
    const auto i_hi = static_cast<int32_t>(std::floor(N / S)) + 1;
    const auto j_hi = static_cast<int32_t>(std::floor(N / S)) + 1;
    for (int32_t j = 0; j <= j_hi; ++j) {
        for (int32_t i = i_lo; i <= i_hi; ++i) {
            Box box;
            box.i = i;
            box.j = j;
            box.x_center = (i + 0.5) * S;
            box.y_center = (j + 0.5) * S;
            const double x0 = i * S, x1 = (i + 1) * S;
            const double y0 = j * S, y1 = (j + 1) * S;
            bool inside = y1 <= (1.0 - eta) * N;
            for (const auto& [cx, cy] :
                 {std::pair{x0, y0}, {x1, y0}, {x0, y1}, {x1, y1}}) {
                inside = inside &&
                         std::abs(cx) <= (1.0 - eta) * envelope(curve, t, cy);
            }
            box.in_lambda = inside;
            grid.boxes.push_back(box);
        }
    }
    return grid;
}

namespace {

// Occupied x's of `run` falling in [x0, x1), preserving the run parity.
int64_t run_count_in(const Run& run, double x0, double x1) {
    auto lo = static_cast<int64_t>(std::ceil(x0));
    auto hi = static_cast<int64_t>(std::floor(x1));
    if (static_cast<double>(hi) == x1) --hi;  // half-open on the right
    lo = std::max<int64_t>(lo, run.lo);
    hi = std::min<int64_t>(hi, run.hi);
    if (hi < lo) return 0;
    // Align lo up and hi down to the run parity.
    if (((lo - run.lo) & 1) != 0) ++lo;
    if (((hi - run.lo) & 1) != 0) --hi;
    if (hi < lo) return 0;
    return (hi - lo) / 2 + 1;
}

}  // namespace

DensityReport measure_density(const Cluster& cluster, const BoxGrid& grid,
                              const ThetaTable& theta, double beta) {
    if (cluster.levels.empty() && cluster.total_sites > 1)
        throw std::invalid_argument(
            "measure_density needs a cluster grown with keep_levels");

    PoissonParams params;
    params.beta = beta;
    params.t = grid.t;

    const double S = grid.side;
    // Per-box occupied counts, accumulated level by level.
    std::map<std::pair<int32_t, int32_t>, int64_t> counts;
    for (int32_t k = 0; k < static_cast<int32_t>(cluster.levels.size()); ++k) {
        const auto j = static_cast<int32_t>(std::floor(k / S));
        for (const Run& run : cluster.levels[static_cast<size_t>(k)].runs) {
            const auto i_first = static_cast<int32_t>(std::floor(run.lo / S));
            const auto i_last = static_cast<int32_t>(std::floor(run.hi / S));
            for (int32_t i = i_first; i <= i_last; ++i) {
                const int64_t c = run_count_in(run, i * S, (i + 1) * S);
                if (c > 0) counts[{i, j}] += c;
            }
        }
    }

    DensityReport report;
    for (const Box& box : grid.boxes) {
        if (!box.in_lambda) continue;
        BoxDensity d;
        d.i = box.i;
        d.j = box.j;
        d.x_center = box.x_center;
        d.y_center = box.y_center;
        const auto it = counts.find({box.i, box.j});
        d.occupied = (it == counts.end()) ? 0 : it->second;
        d.D = static_cast<double>(d.occupied) / (S * S);
        d.D_parity = 2.0 * d.D;
        d.theta_ref = theta.theta(rho(box.y_center, params));
        d.deviation = std::abs(d.D_parity - d.theta_ref);
        report.boxes.push_back(d);
        report.sup_deviation = std::max(report.sup_deviation, d.deviation);
    }
    report.box_count = static_cast<int64_t>(report.boxes.size());
    return report;
}

}  // namespace oplab
