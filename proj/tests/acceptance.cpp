// Acceptance suite: one line per criterion, [PASS]/[FAIL] with the measured
// numbers. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "oplab/density.hpp"
#include "oplab/estimators.hpp"
#include "oplab/fluctuations.hpp"
#include "oplab/harness.hpp"
#include "oplab/io.hpp"
#include "oplab/parallel.hpp"
#include "oplab/poisson.hpp"
#include "oplab/shape.hpp"

using namespace oplab;

namespace {

int failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] C%-2d %-28s %s  (%.1f s)\n", pass ? "PASS" : "FAIL",
                index, name, detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++failures;
}

template <class Fn>
void criterion(int index, const char* name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    report(index, name, pass, detail, secs);
}

std::string fmtd(double v) { return io::fmt(v); }

// ---- C1: exact-oracle equivalence --------------------------------------

std::pair<bool, std::string> c1_oracle() {
    const int32_t K = 3;
    const int64_t n = 100000;
    bool ok = true;
    double worst = 0.0;
    for (double p : {0.2, 0.5, 0.8}) {
        const ExactLaw law = exact_enumeration(p, K, SeedGeometry::Origin);
        HomogParams params;
        params.p = p;
        params.max_height = K;
        const auto draws = parallel_map<int32_t>(
            static_cast<size_t>(n), default_workers(), [&](size_t i) {
                const Cluster c =
                    grow_cluster(params, EdgeSampler(1001, i));
                return (c.height == K) ? c.r(K)
                                       : std::numeric_limits<int32_t>::min();
            });
        int64_t reached = 0;
        std::map<int32_t, int64_t> r_counts;
        for (int32_t r : draws) {
            if (r == std::numeric_limits<int32_t>::min()) continue;
            ++reached;
            ++r_counts[r];
        }
        auto check = [&](double phat, double prob) {
            const double sigma = std::sqrt(prob * (1 - prob) / n);
            const double dev = std::abs(phat - prob) / sigma;
            worst = std::max(worst, dev);
            if (dev > 3.0) ok = false;
        };
        check(static_cast<double>(reached) / n, law.p_reach_K);
        for (const auto& [x, prob] : law.r_K_law)
            check(static_cast<double>(r_counts[x]) / n, prob);
    }
    return {ok, "worst |dev| = " + fmtd(worst) + " sigma over p in {.2,.5,.8}"};
}

// ---- C2: known constants ------------------------------------------------

std::pair<bool, std::string> c2_constants() {
    EstimateOptions opt;
    opt.seed = 1002;
    const AlphaEstimate one = estimate_alpha(1.0, 2000, 200, opt);
    const Sigma2Estimate zero = estimate_sigma2(1.0, 2000, 200, opt);
    const AlphaEstimate crit = estimate_alpha(kPc, 2000, 200, opt);
    const bool ok = one.alpha_hat == 1.0 && one.stderr_ == 0.0 &&
                    zero.sigma2_hat == 0.0 &&
                    std::abs(crit.alpha_hat) <= 0.05;
    return {ok, "alpha(1) = " + fmtd(one.alpha_hat) +
                    ", sigma2(1) = " + fmtd(zero.sigma2_hat) +
                    ", alpha(p_c) = " + fmtd(crit.alpha_hat) + " +- " +
                    fmtd(crit.stderr_)};
}

// ---- C3: height scale ---------------------------------------------------

std::pair<bool, std::string> c3_height_scale() {
    PoissonParams params;
    params.beta = 0.5;
    params.t = 30.0;
    const double N = height_scale(kPc, params);
    return {std::abs(N - 839.0) <= 3.0, "N(p_c, 30) = " + fmtd(N)};
}

// ---- C4: monotone coupling ----------------------------------------------

std::pair<bool, std::string> c4_coupling() {
    HomogParams lo, hi;
    lo.p = 0.6;
    hi.p = 0.8;
    lo.max_height = hi.max_height = 100;
    lo.grow.keep_levels = hi.grow.keep_levels = true;
    const auto violations = parallel_map<int>(
        1000, default_workers(), [&](size_t i) {
            EdgeSampler sampler(1004, i);
            const Cluster a = grow_cluster(lo, sampler);
            const Cluster b = grow_cluster(hi, sampler);
            if (a.levels.size() > b.levels.size()) return 1;
            for (size_t k = 0; k < a.levels.size(); ++k)
                for (const Run& run : a.levels[k].runs)
                    for (int32_t x = run.lo; x <= run.hi; x += 2)
                        if (!b.levels[k].contains(x)) return 1;
            return 0;
        });
    int64_t bad = 0;
    for (int v : violations) bad += v;
    return {bad == 0, "violations = " + std::to_string(bad) + " / 1000"};
}

// ---- C5: subcritical + dual tails ----------------------------------------

std::pair<bool, std::string> c5_tails() {
    EstimateOptions opt;
    opt.seed = 1005;
    // Survival-depth tail at p = 0.55, K = 400.
    const TailRates sub = estimate_tail_rates(0.55, 400, 100000, opt);

    // Dual tail at p = 0.8: P(k <= depth < infinity) from finite duals.
    const int32_t cutoff = 60;
    const auto depths = parallel_map<int32_t>(
        200000, default_workers(), [&](size_t i) {
            const DualResult d =
                dual_survival(Site{0, cutoff}, 0.8, cutoff, EdgeSampler(1055, i));
            return d.survived ? -1 : d.depth;
        });
    std::vector<int64_t> tail(static_cast<size_t>(cutoff) + 1, 0);
    int64_t finite = 0;
    for (int32_t d : depths) {
        if (d < 0) continue;
        ++finite;
        for (int32_t k = 0; k <= d; ++k) ++tail[static_cast<size_t>(k)];
    }
    std::vector<double> ks, logp;
    for (size_t k = 0; k < tail.size() && tail[k] >= 10; ++k) {
        ks.push_back(static_cast<double>(k));
        logp.push_back(std::log(static_cast<double>(tail[k]) / finite));
    }
    const stats::WindowFit dual_fit = stats::best_window_fit(ks, logp, 8);

    const bool ok = sub.parallel.r_squared > 0.98 && sub.parallel.rate > 0 &&
                    dual_fit.fit.r_squared > 0.95 && dual_fit.fit.slope < 0;
    return {ok, "survival R^2 = " + fmtd(sub.parallel.r_squared) +
                    " (rate " + fmtd(sub.parallel.rate) + "), dual R^2 = " +
                    fmtd(dual_fit.fit.r_squared) + " (rate " +
                    fmtd(-dual_fit.fit.slope) + ")"};
}

// Shared tables for C6-C8, built once.

struct Tables {
    SpeedTable speeds;
    ThetaTable thetas;
    VarianceTable vars;
};

Tables build_tables() {
    EstimateOptions opt;
    opt.seed = 1100;
    Tables t;
    t.speeds = build_speed_table(default_p_grid(), 2000, 200, opt);
    t.thetas = build_theta_table(default_p_grid(), 500, 2000, opt);
    t.vars = build_variance_table({0.85, 0.875, 0.90, 0.925, 0.95, 0.975, 1.0},
                                  2000, 200, opt);
    return t;
}

// ---- C6: envelope ---------------------------------------------------------

std::pair<bool, std::string> c6_envelope(const Tables& tables) {
    const double beta = 1.0, t = 400.0, eta = 0.15;
    const ShapeCurve curve = build_shape(beta, tables.speeds, 1e-3);
    PoissonParams params;
    params.beta = beta;
    params.t = t;
    const double N = height_scale(kPc, params);
    const auto inner_top = static_cast<int32_t>(std::floor((1 - eta) * N));

    struct Row {
        bool survived = false;
        bool outer_clean = false;
        bool inner_ok = false;
    };
    const auto rows = parallel_map<Row>(50, default_workers(), [&](size_t i) {
        EdgeSampler sampler(1006, i);
        const Cluster c = grow_poisson_cluster(params, sampler);
        if (c.height < inner_top) return Row{};
        const EnvelopeReport rep = check_envelope(c, curve, t, eta);
        return Row{true, rep.outer_violations == 0,
                   rep.inner_violation_fraction() < 0.05};
    });
    int64_t survived = 0, good = 0;
    for (const Row& r : rows) {
        if (!r.survived) continue;
        ++survived;
        if (r.outer_clean && r.inner_ok) ++good;
    }
    const double frac =
        survived ? static_cast<double>(good) / survived : 0.0;
    return {survived >= 45 && frac >= 0.90,
            "survivors " + std::to_string(survived) + "/50, clean fraction = " +
                fmtd(frac)};
}

// ---- C7: density ----------------------------------------------------------

std::pair<bool, std::string> c7_density(const Tables& tables) {
    const double beta = 0.5, a = 0.7, eta = 0.25;
    const ShapeCurve curve = build_shape(beta, tables.speeds, 1e-3);

    auto run_at = [&](double t, uint64_t seed) {
        PoissonParams params;
        params.beta = beta;
        params.t = t;
        params.grow.keep_levels = true;
        const BoxGrid grid = build_grid(curve, t, a, eta);
        return parallel_map<double>(50, default_workers(), [&](size_t i) {
            const Cluster c = grow_poisson_cluster(params, EdgeSampler(seed, i));
            return measure_density(c, grid, tables.thetas, beta).sup_deviation;
        });
    };
    const auto sup30 = run_at(30.0, 1007);
    const auto sup60 = run_at(60.0, 1007);
    int64_t ok_count = 0;
    for (double s : sup30)
        if (s < 0.1) ++ok_count;
    const double frac = static_cast<double>(ok_count) / 50.0;
    const double med30 = stats::median(sup30);
    const double med60 = stats::median(sup60);
    return {frac >= 0.80 && med60 < med30,
            "P(sup dev < 0.1) = " + fmtd(frac) + ", median t=30: " +
                fmtd(med30) + " -> t=60: " + fmtd(med60)};
}

// ---- C8: CLT ----------------------------------------------------------------

std::pair<bool, std::string> c8_clt(const Tables& tables) {
    PoissonParams params;
    params.beta = 1.0;
    params.t = 400.0;
    EstimateOptions opt;
    opt.seed = 1;  // canonical default seed
    const std::vector<double> u_grid{0.25, 0.5, 0.75};
    EdgeFunctional samples =
        sample_W(params, u_grid, tables.speeds, tables.vars, 210, opt);
    if (samples.W.size() < 200)
        return {false, "only " + std::to_string(samples.W.size()) + " survivors"};
    samples.W.resize(200);  // exactly 200 surviving replicates

    const std::vector<double> w = samples.column(1);  // u = 0.5
    const double mean_w = stats::mean(w);
    const double se = stats::stddev(w) / std::sqrt(200.0);
    const double ratio = stats::variance(w) / samples.V[1];
    const stats::NormalityResult norm =
        test_gaussianity(w, 4242, 2000, 2.0 / std::sqrt(samples.N));
    const IncrementReport inc = test_increment_independence(samples, 0.01);

    // Calibration: normal inputs keep the 5% rejection rate within 2 points.
    stats::Rng rng(990);
    const std::vector<double> null200 = stats::normality_null_table(200);
    int rejected = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs(200);
        for (double& v : xs) v = rng.normal();
        if (stats::normality_test(xs, null200).p_value <= 0.05) ++rejected;
    }
    const double rej_rate = rejected / 200.0;
    // Power: exponential at n = 500 rejected at 1% in at least 99% of trials.
    const std::vector<double> null500 = stats::normality_null_table(500);
    int power_hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> xs(500);
        for (double& v : xs) v = rng.exponential(1.0);
        if (stats::normality_test(xs, null500).p_value <= 0.01) ++power_hits;
    }

    const bool ok = std::abs(mean_w) <= 3.0 * se && ratio >= 0.7 &&
                    ratio <= 1.4 && norm.p_value > 0.01 && !inc.any_flagged &&
                    std::abs(rej_rate - 0.05) <= 0.02 && power_hits >= 99;
    return {ok, "mean W = " + fmtd(mean_w) + " (se " + fmtd(se) +
                    "), var ratio = " + fmtd(ratio) + ", normality p = " +
                    fmtd(norm.p_value) +
                    ", flags = " + (inc.any_flagged ? "yes" : "no") +
                    ", calib rej = " + fmtd(rej_rate) +
                    ", power = " + std::to_string(power_hits) + "/100"};
}

// ---- C9: exponent arithmetic + exploratory fit -----------------------------

std::pair<bool, std::string> c9_exponent() {
    const double b_exact = kNuParallel / (1.0 + kNuParallel);
    const bool arith_ok = std::abs(b_exact - 0.634) < 5e-4;

    EstimateOptions opt;
    opt.seed = 1009;
    const HeightFluctuationFit fit =
        fit_height_exponent(0.5, {10.0, 20.0, 40.0, 80.0}, 200, opt);
    const bool fit_ok = fit.b_hat > 0.45 && fit.b_hat < 0.8;
    return {arith_ok && fit_ok,
            "nu/(1+nu) = " + fmtd(b_exact) + ", b_hat = " + fmtd(fit.b_hat) +
                " +- " + fmtd(fit.stderr_) + " (exploratory band only)"};
}

// ---- C10: determinism -------------------------------------------------------

std::pair<bool, std::string> c10_determinism() {
    namespace fs = std::filesystem;
    using nlohmann::json;
    const json params{{"p_grid", json::array({0.8, 0.9})},
                      {"K", 500},
                      {"replicates", 100},
                      {"seed", 10}};
    auto run_with = [&](unsigned workers, const char* dir) {
        ExperimentConfig cfg =
            ExperimentConfig::from_json("estimate-sigma2", params);
        cfg.out_dir = fs::temp_directory_path() / "oplab_acceptance" / dir;
        fs::remove_all(cfg.out_dir);
        cfg.workers = workers;
        return run(cfg);
    };
    const ExperimentReport r1 = run_with(1, "w1");
    const ExperimentReport r8 = run_with(8, "w8");
    std::map<std::string, std::string> h1, h8;
    for (const FileEntry& f : r1.files) h1[f.name] = f.fnv1a;
    for (const FileEntry& f : r8.files) h8[f.name] = f.fnv1a;
    return {h1 == h8 && h1.size() >= 3,
            "files hashed: " + std::to_string(h1.size()) +
                (h1 == h8 ? ", identical at workers 1 and 8"
                          : ", MISMATCH between worker counts")};
}

}  // namespace

int main() {
    std::printf("acceptance suite: oriented Poisson percolation lab\n");
    criterion(1, "exact-oracle equivalence", c1_oracle);
    criterion(2, "known constants", c2_constants);
    criterion(3, "height scale", c3_height_scale);
    criterion(4, "monotone coupling", c4_coupling);
    criterion(5, "subcritical + dual tails", c5_tails);

    Tables tables;
    {
        const auto start = std::chrono::steady_clock::now();
        tables = build_tables();
        std::printf("      (shared estimator tables built in %.1f s)\n",
                    std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count());
    }
    criterion(6, "envelope theorems", [&] { return c6_envelope(tables); });
    criterion(7, "box densities", [&] { return c7_density(tables); });
    criterion(8, "edge CLT", [&] { return c8_clt(tables); });
    criterion(9, "fluctuation exponent", c9_exponent);
    criterion(10, "worker determinism", c10_determinism);

    std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
