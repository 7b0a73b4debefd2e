#include "oplab/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oplab/density.hpp"
#include "oplab/estimators.hpp"
#include "oplab/fluctuations.hpp"
#include "oplab/io.hpp"
#include "oplab/parallel.hpp"
#include "oplab/poisson.hpp"
#include "oplab/shape.hpp"

namespace oplab {

using nlohmann::json;

ExperimentKind parse_kind(const std::string& name) {
    if (name == "simulate") return ExperimentKind::Simulate;
    if (name == "estimate-alpha") return ExperimentKind::EstimateAlpha;
    if (name == "estimate-theta") return ExperimentKind::EstimateTheta;
    if (name == "estimate-sigma2") return ExperimentKind::EstimateSigma2;
    if (name == "tails") return ExperimentKind::Tails;
    if (name == "shape") return ExperimentKind::Shape;
    if (name == "envelope") return ExperimentKind::Envelope;
    if (name == "density") return ExperimentKind::Density;
    if (name == "fluct") return ExperimentKind::Fluct;
    if (name == "exponent") return ExperimentKind::Exponent;
    if (name == "render") return ExperimentKind::Render;
    throw ConfigError("kind", "unknown experiment kind '" + name + "'");
}

std::string kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Simulate: return "simulate";
        case ExperimentKind::EstimateAlpha: return "estimate-alpha";
        case ExperimentKind::EstimateTheta: return "estimate-theta";
        case ExperimentKind::EstimateSigma2: return "estimate-sigma2";
        case ExperimentKind::Tails: return "tails";
        case ExperimentKind::Shape: return "shape";
        case ExperimentKind::Envelope: return "envelope";
        case ExperimentKind::Density: return "density";
        case ExperimentKind::Fluct: return "fluct";
        case ExperimentKind::Exponent: return "exponent";
        case ExperimentKind::Render: return "render";
    }
    return "?";
}

namespace {

enum class FieldType { Double, Int, UInt64, Bool, String, DoubleArray };

struct FieldSpec {
    const char* name;
    FieldType type;
    bool required = false;
    json default_value;  // null when there is no default
};

const std::vector<FieldSpec>& schema_for(ExperimentKind kind) {
    static const std::vector<FieldSpec> simulate = {
        {"seed", FieldType::UInt64, false, 1},
        {"beta", FieldType::Double, true, {}},
        {"t", FieldType::Double, true, {}},
        {"max_height_cap", FieldType::Int, false, 0},
        {"with_sites", FieldType::Bool, false, true},
        {"svg", FieldType::Bool, false, true},
    };
    static const std::vector<FieldSpec> est = {
        {"seed", FieldType::UInt64, false, 1},
        {"p", FieldType::Double, false, {}},
        {"p_grid", FieldType::DoubleArray, false, {}},
        {"K", FieldType::Int, true, {}},
        {"replicates", FieldType::Int, true, {}},
    };
    static const std::vector<FieldSpec> tails = {
        {"seed", FieldType::UInt64, false, 1},
        {"p", FieldType::Double, true, {}},
        {"K", FieldType::Int, true, {}},
        {"replicates", FieldType::Int, true, {}},
        {"supercritical", FieldType::Bool, false, false},
    };
    static const std::vector<FieldSpec> shape = {
        {"seed", FieldType::UInt64, false, 1},
        {"beta", FieldType::Double, true, {}},
        {"grid_step", FieldType::Double, false, 1e-3},
        {"speed_table", FieldType::String, false, {}},
        {"p_grid", FieldType::DoubleArray, false, {}},
        {"table_K", FieldType::Int, false, 1000},
        {"table_replicates", FieldType::Int, false, 200},
    };
    static const std::vector<FieldSpec> envelope = {
        {"seed", FieldType::UInt64, false, 1},
        {"beta", FieldType::Double, true, {}},
        {"t", FieldType::Double, true, {}},
        {"eta", FieldType::Double, false, 0.15},
        {"replicates", FieldType::Int, true, {}},
        {"grid_step", FieldType::Double, false, 1e-3},
        {"speed_table", FieldType::String, false, {}},
        {"p_grid", FieldType::DoubleArray, false, {}},
        {"table_K", FieldType::Int, false, 1000},
        {"table_replicates", FieldType::Int, false, 200},
        {"svg", FieldType::Bool, false, true},
    };
    static const std::vector<FieldSpec> density = {
        {"seed", FieldType::UInt64, false, 1},
        {"beta", FieldType::Double, true, {}},
        {"t", FieldType::Double, true, {}},
        {"a", FieldType::Double, false, 0.7},
        {"eta", FieldType::Double, false, 0.25},
        {"replicates", FieldType::Int, true, {}},
        {"grid_step", FieldType::Double, false, 1e-3},
        {"speed_table", FieldType::String, false, {}},
        {"theta_table", FieldType::String, false, {}},
        {"p_grid", FieldType::DoubleArray, false, {}},
        {"table_K", FieldType::Int, false, 1000},
        {"table_replicates", FieldType::Int, false, 200},
        {"theta_K", FieldType::Int, false, 500},
        {"theta_replicates", FieldType::Int, false, 2000},
        {"svg", FieldType::Bool, false, true},
    };
    static const std::vector<FieldSpec> fluct = {
        {"seed", FieldType::UInt64, false, 1},
        {"beta", FieldType::Double, true, {}},
        {"t", FieldType::Double, true, {}},
        {"u_grid", FieldType::DoubleArray, false,
         json::array({0.1, 0.25, 0.5, 0.75, 0.9})},
        {"replicates", FieldType::Int, true, {}},
        {"grid_step", FieldType::Double, false, 1e-3},
        {"speed_table", FieldType::String, false, {}},
        {"variance_table", FieldType::String, false, {}},
        {"p_grid", FieldType::DoubleArray, false, {}},
        {"table_K", FieldType::Int, false, 1000},
        {"table_replicates", FieldType::Int, false, 200},
        {"variance_K", FieldType::Int, false, 1000},
        {"variance_replicates", FieldType::Int, false, 200},
        {"break_points", FieldType::Bool, false, false},
        {"scan_fraction", FieldType::Double, false, 0.8},
    };
    static const std::vector<FieldSpec> exponent = {
        {"seed", FieldType::UInt64, false, 1},
        {"beta", FieldType::Double, true, {}},
        {"t_list", FieldType::DoubleArray, true, {}},
        {"replicates", FieldType::Int, true, {}},
    };
    static const std::vector<FieldSpec> render = {
        {"seed", FieldType::UInt64, false, 1},
        {"input", FieldType::String, true, {}},
        {"beta", FieldType::Double, false, {}},
        {"t", FieldType::Double, false, {}},
        {"eta", FieldType::Double, false, 0.0},
        {"shape_csv", FieldType::String, false, {}},
    };
    switch (kind) {
        case ExperimentKind::Simulate: return simulate;
        case ExperimentKind::EstimateAlpha:
        case ExperimentKind::EstimateTheta:
        case ExperimentKind::EstimateSigma2: return est;
        case ExperimentKind::Tails: return tails;
        case ExperimentKind::Shape: return shape;
        case ExperimentKind::Envelope: return envelope;
        case ExperimentKind::Density: return density;
        case ExperimentKind::Fluct: return fluct;
        case ExperimentKind::Exponent: return exponent;
        case ExperimentKind::Render: return render;
    }
    return simulate;
}

bool type_matches(const json& v, FieldType type) {
    switch (type) {
        case FieldType::Double: return v.is_number();
        case FieldType::Int:
        case FieldType::UInt64: return v.is_number_integer();
        case FieldType::Bool: return v.is_boolean();
        case FieldType::String: return v.is_string();
        case FieldType::DoubleArray:
            if (!v.is_array()) return false;
            for (const auto& e : v)
                if (!e.is_number()) return false;
            return true;
    }
    return false;
}

json validated_params(ExperimentKind kind, json values) {
    const auto& schema = schema_for(kind);
    for (const auto& [key, value] : values.items()) {
        const auto it =
            std::find_if(schema.begin(), schema.end(),
                         [&](const FieldSpec& f) { return key == f.name; });
        if (it == schema.end())
            throw ConfigError(key, "unknown key for kind '" + kind_name(kind) + "'");
        if (!type_matches(value, it->type))
            throw ConfigError(key, "wrong type");
    }
    for (const FieldSpec& f : schema) {
        if (values.contains(f.name)) continue;
        if (f.required) throw ConfigError(f.name, "required");
        if (!f.default_value.is_null()) values[f.name] = f.default_value;
    }
    const bool is_estimate = kind == ExperimentKind::EstimateAlpha ||
                             kind == ExperimentKind::EstimateTheta ||
                             kind == ExperimentKind::EstimateSigma2;
    if (is_estimate && !values.contains("p") && !values.contains("p_grid"))
        throw ConfigError("p", "provide p or p_grid");
    return values;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& kind,
                                             json values) {
    if (!values.is_object()) throw ConfigError("<root>", "config must be an object");
    ExperimentConfig cfg;
    cfg.kind = parse_kind(kind);
    if (values.contains("kind")) {
        if (!values["kind"].is_string() ||
            values["kind"].get<std::string>() != kind)
            throw ConfigError("kind", "does not match the requested experiment");
        values.erase("kind");
    }
    if (values.contains("out")) {
        if (!values["out"].is_string()) throw ConfigError("out", "wrong type");
        cfg.out_dir = values["out"].get<std::string>();
        values.erase("out");
    }
    if (values.contains("workers")) {
        if (!values["workers"].is_number_integer() ||
            values["workers"].get<int64_t>() < 0)
            throw ConfigError("workers", "must be a nonnegative integer");
        cfg.workers = values["workers"].get<unsigned>();
        values.erase("workers");
    }
    cfg.params = validated_params(cfg.kind, std::move(values));
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& kind,
                                        const std::filesystem::path& config_file,
                                        const json& overrides) {
    json values = json::object();
    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in)
            throw ConfigError("config", "cannot open " + config_file.string());
        try {
            in >> values;
        } catch (const json::parse_error& e) {
            throw ConfigError("config", std::string("parse error: ") + e.what());
        }
    }
    for (const auto& [key, value] : overrides.items()) values[key] = value;
    return from_json(kind, std::move(values));
}

namespace {

unsigned resolve_workers(const ExperimentConfig& cfg) {
    if (cfg.workers > 0) return cfg.workers;
    if (const char* env = std::getenv("OPLAB_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return default_workers();
}

// Collects emitted files so the manifest can list every artifact.
struct Emitter {
    std::filesystem::path dir;
    std::vector<FileEntry> files;

    void emit(const std::string& name, const std::string& body) {
        io::write_text(dir / name, body);
        files.push_back({name, body.size(), io::fnv1a_hex(body)});
    }
};

EstimateOptions options_of(const ExperimentConfig& cfg) {
    EstimateOptions opt;
    opt.seed = cfg.params.at("seed").get<uint64_t>();
    opt.workers = resolve_workers(cfg);
    return opt;
}

std::vector<double> p_list_of(const json& params) {
    std::vector<double> ps;
    if (params.contains("p_grid"))
        ps = params.at("p_grid").get<std::vector<double>>();
    if (params.contains("p")) ps.push_back(params.at("p").get<double>());
    if (ps.empty())
        throw ConfigError("p", "provide p or p_grid");
    return ps;
}

SpeedTable resolve_speed_table(const ExperimentConfig& cfg, Emitter& em,
                               int64_t* replicates_done) {
    const json& p = cfg.params;
    if (p.contains("speed_table")) {
        const auto rows =
            io::parse_table_csv(p.at("speed_table").get<std::string>());
        return SpeedTable(rows);
    }
    const auto grid = p.contains("p_grid")
                          ? p.at("p_grid").get<std::vector<double>>()
                          : default_p_grid();
    const auto K = p.at("table_K").get<int32_t>();
    const auto reps = p.at("table_replicates").get<int64_t>();
    const SpeedTable table = build_speed_table(grid, K, reps, options_of(cfg));
    if (replicates_done)
        *replicates_done += reps * static_cast<int64_t>(grid.size());
    em.emit("speed.csv", io::table_csv(table.rows()));
    return table;
}

ThetaTable resolve_theta_table(const ExperimentConfig& cfg, Emitter& em,
                               int64_t* replicates_done) {
    const json& p = cfg.params;
    if (p.contains("theta_table")) {
        const auto rows =
            io::parse_table_csv(p.at("theta_table").get<std::string>());
        return ThetaTable(rows);
    }
    const auto grid = p.contains("p_grid")
                          ? p.at("p_grid").get<std::vector<double>>()
                          : default_p_grid();
    const auto K = p.at("theta_K").get<int32_t>();
    const auto reps = p.at("theta_replicates").get<int64_t>();
    const ThetaTable table = build_theta_table(grid, K, reps, options_of(cfg));
    if (replicates_done)
        *replicates_done += reps * static_cast<int64_t>(grid.size());
    em.emit("theta.csv", io::table_csv(table.rows()));
    return table;
}

VarianceTable resolve_variance_table(const ExperimentConfig& cfg, Emitter& em,
                                     int64_t* replicates_done) {
    const json& p = cfg.params;
    if (p.contains("variance_table")) {
        const auto rows =
            io::parse_table_csv(p.at("variance_table").get<std::string>());
        return VarianceTable(rows);
    }
    const auto grid = p.contains("p_grid")
                          ? p.at("p_grid").get<std::vector<double>>()
                          : default_p_grid();
    const auto K = p.at("variance_K").get<int32_t>();
    const auto reps = p.at("variance_replicates").get<int64_t>();
    const VarianceTable table =
        build_variance_table(grid, K, reps, options_of(cfg));
    if (replicates_done)
        *replicates_done += reps * static_cast<int64_t>(grid.size());
    em.emit("variance.csv", io::table_csv(table.rows()));
    return table;
}

int64_t exec_simulate(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    PoissonParams params;
    params.beta = p.at("beta").get<double>();
    params.t = p.at("t").get<double>();
    params.max_height_cap = p.at("max_height_cap").get<int32_t>();
    params.grow.keep_levels = true;
    EdgeSampler sampler(p.at("seed").get<uint64_t>(), 0);
    const Cluster cluster = grow_poisson_cluster(params, sampler);
    em.emit("cluster.csv", io::cluster_csv(cluster, p.at("with_sites").get<bool>()));
    if (p.at("svg").get<bool>()) {
        io::RenderOptions ropt;
        ropt.N = params.t > 0 ? height_scale(kPc, params) : 0.0;
        em.emit("cluster.svg", io::render_cluster_svg(cluster, ropt));
    }
    json meta;
    meta["height"] = cluster.height;
    meta["censored"] = cluster.censored;
    meta["total_sites"] = cluster.total_sites;
    if (params.t > 0) meta["N"] = height_scale(kPc, params);
    em.emit("simulate.json", meta.dump(2) + "\n");
    return 1;
}

int64_t exec_estimate(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    const auto ps = p_list_of(p);
    const auto K = p.at("K").get<int32_t>();
    const auto reps = p.at("replicates").get<int64_t>();
    const EstimateOptions opt = options_of(cfg);

    std::vector<TableRow> rows;
    json details = json::array();
    for (double prob : ps) {
        json d;
        d["p"] = prob;
        if (cfg.kind == ExperimentKind::EstimateAlpha) {
            const AlphaEstimate e = estimate_alpha(prob, K, reps, opt);
            rows.push_back({prob, e.alpha_hat, e.stderr_, K, e.used_replicates});
            d["empty_level_fraction"] = e.empty_level_fraction;
        } else if (cfg.kind == ExperimentKind::EstimateTheta) {
            const ThetaEstimate e = estimate_theta(prob, K, reps, opt);
            rows.push_back({prob, e.theta_hat, e.stderr_, K, reps});
            d["theta_hat_2K"] = e.theta_hat_2K;
        } else {
            const Sigma2Estimate e = estimate_sigma2(prob, K, reps, opt);
            rows.push_back({prob, e.sigma2_hat, e.stderr_, K, reps});
            d["near_critical_warning"] = e.near_critical_warning;
        }
        d["value"] = rows.back().value;
        d["stderr"] = rows.back().stderr_;
        details.push_back(d);
    }
    const char* stem = cfg.kind == ExperimentKind::EstimateAlpha ? "alpha"
                       : cfg.kind == ExperimentKind::EstimateTheta ? "theta"
                                                                   : "sigma2";
    em.emit(std::string(stem) + ".csv", io::table_csv(rows));
    json meta;
    meta["seed"] = opt.seed;
    meta["K"] = K;
    meta["replicates"] = reps;
    meta["grid"] = ps;
    meta["estimates"] = details;
    em.emit(std::string(stem) + ".json", meta.dump(2) + "\n");
    return reps * static_cast<int64_t>(ps.size());
}

int64_t exec_tails(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    const auto prob = p.at("p").get<double>();
    const auto K = p.at("K").get<int32_t>();
    const auto reps = p.at("replicates").get<int64_t>();
    const EstimateOptions opt = options_of(cfg);
    const TailRates rates = estimate_tail_rates(
        prob, K, reps, opt, p.at("supercritical").get<bool>());
    json meta;
    meta["seed"] = opt.seed;
    meta["p"] = prob;
    meta["K"] = K;
    meta["replicates"] = reps;
    meta["gamma_parallel"] = rates.parallel.rate;
    meta["gamma_perp"] = rates.perp.rate;
    meta["L_parallel"] = rates.L_par;
    meta["L_perp"] = rates.L_perp;
    meta["parallel_fit"] = {{"r_squared", rates.parallel.r_squared},
                            {"window_begin", rates.parallel.window_begin},
                            {"window_end", rates.parallel.window_end}};
    meta["perp_fit"] = {{"r_squared", rates.perp.r_squared},
                        {"window_begin", rates.perp.window_begin},
                        {"window_end", rates.perp.window_end}};
    em.emit("tails.json", meta.dump(2) + "\n");
    return reps;
}

int64_t exec_shape(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    int64_t reps = 0;
    const SpeedTable speeds = resolve_speed_table(cfg, em, &reps);
    const ShapeCurve curve = build_shape(p.at("beta").get<double>(), speeds,
                                         p.at("grid_step").get<double>());
    em.emit("shape.csv", io::shape_csv(curve));
    json meta;
    meta["beta"] = curve.beta();
    meta["y_c"] = curve.y_c();
    meta["g_y_c"] = curve.g_at_yc();
    meta["grid_points"] = curve.y_grid().size();
    em.emit("shape.json", meta.dump(2) + "\n");
    return std::max<int64_t>(reps, 1);
}

int64_t exec_envelope(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    int64_t table_reps = 0;
    const SpeedTable speeds = resolve_speed_table(cfg, em, &table_reps);
    const double beta = p.at("beta").get<double>();
    const double t = p.at("t").get<double>();
    const double eta = p.at("eta").get<double>();
    const auto reps = p.at("replicates").get<int64_t>();
    const ShapeCurve curve =
        build_shape(beta, speeds, p.at("grid_step").get<double>());

    PoissonParams params;
    params.beta = beta;
    params.t = t;
    const double N = height_scale(kPc, params);
    const auto inner_top = static_cast<int32_t>(std::floor((1.0 - eta) * N));
    const EstimateOptions opt = options_of(cfg);

    struct Row {
        bool survived;
        EnvelopeReport rep;
    };
    const auto rows = parallel_map<Row>(
        static_cast<size_t>(reps), opt.workers, [&](size_t i) {
            EdgeSampler sampler(opt.seed, i);
            const Cluster c = grow_poisson_cluster(params, sampler);
            return Row{c.height >= inner_top, check_envelope(c, curve, t, eta)};
        });

    std::string csv =
        "replicate,survived,outer_violation_fraction,inner_violation_fraction,"
        "max_rel_excursion\n";
    int64_t survivors = 0, outer_clean = 0, inner_ok = 0;
    std::vector<double> inner_fracs;
    for (size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        csv += std::to_string(i);
        csv += ',';
        csv += row.survived ? '1' : '0';
        csv += ',';
        csv += io::fmt(row.rep.outer_violation_fraction());
        csv += ',';
        csv += io::fmt(row.rep.inner_violation_fraction());
        csv += ',';
        csv += io::fmt(row.rep.max_rel_excursion);
        csv += '\n';
        if (row.survived) {
            ++survivors;
            inner_fracs.push_back(row.rep.inner_violation_fraction());
            if (row.rep.outer_violations == 0) ++outer_clean;
            if (row.rep.inner_violation_fraction() < 0.05) ++inner_ok;
        }
    }
    em.emit("envelope.csv", csv);

    json meta;
    meta["seed"] = opt.seed;
    meta["beta"] = beta;
    meta["t"] = t;
    meta["eta"] = eta;
    meta["N"] = N;
    meta["replicates"] = reps;
    meta["survivors"] = survivors;
    meta["outer_clean_fraction"] =
        survivors ? static_cast<double>(outer_clean) / survivors : 0.0;
    meta["inner_ok_fraction"] =
        survivors ? static_cast<double>(inner_ok) / survivors : 0.0;
    if (!inner_fracs.empty())
        meta["median_inner_violation_fraction"] = stats::median(inner_fracs);
    em.emit("envelope.json", meta.dump(2) + "\n");

    if (p.at("svg").get<bool>()) {
        EdgeSampler sampler(opt.seed, 0);
        PoissonParams render_params = params;
        render_params.grow.keep_levels = true;
        const Cluster c = grow_poisson_cluster(render_params, sampler);
        io::RenderOptions ropt;
        ropt.N = N;
        ropt.overlay = &curve;
        ropt.t = t;
        ropt.eta = eta;
        em.emit("envelope.svg", io::render_cluster_svg(c, ropt));
    }
    return reps + table_reps;
}

std::string deviation_heatmap_svg(const BoxGrid& grid,
                                  const DensityReport& report) {
    const double S = grid.side;
    const double xmax = grid.N + S;
    const double scale = 800.0 / (2 * xmax);
    const double h = (grid.N + S) * scale + 20;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\""
        << io::fmt(h + 20) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const BoxDensity& b : report.boxes) {
        const double frac = std::min(1.0, b.deviation / 0.2);
        const int red = 255;
        const int other = static_cast<int>(255 * (1.0 - frac));
        svg << "<rect x=\"" << io::fmt(10 + (b.i * S + xmax) * scale)
            << "\" y=\"" << io::fmt(h - (b.j + 1) * S * scale) << "\" width=\""
            << io::fmt(S * scale) << "\" height=\"" << io::fmt(S * scale)
            << "\" fill=\"rgb(" << red << ',' << other << ',' << other
            << ")\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

int64_t exec_density(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    int64_t table_reps = 0;
    const SpeedTable speeds = resolve_speed_table(cfg, em, &table_reps);
    const ThetaTable theta = resolve_theta_table(cfg, em, &table_reps);
    const double beta = p.at("beta").get<double>();
    const double t = p.at("t").get<double>();
    const double a = p.at("a").get<double>();
    const double eta = p.at("eta").get<double>();
    const auto reps = p.at("replicates").get<int64_t>();
    const ShapeCurve curve =
        build_shape(beta, speeds, p.at("grid_step").get<double>());
    const BoxGrid grid = build_grid(curve, t, a, eta);
    if (grid.lambda_count() == 0)
        throw std::runtime_error(
            "density: Lambda is empty (N^a too large for this t)");

    PoissonParams params;
    params.beta = beta;
    params.t = t;
    params.grow.keep_levels = true;
    const EstimateOptions opt = options_of(cfg);

    const auto reports = parallel_map<DensityReport>(
        static_cast<size_t>(reps), opt.workers, [&](size_t i) {
            EdgeSampler sampler(opt.seed, i);
            const Cluster c = grow_poisson_cluster(params, sampler);
            return measure_density(c, grid, theta, beta);
        });

    std::string csv = "replicate,sup_deviation,box_count\n";
    std::vector<double> sups;
    for (size_t i = 0; i < reports.size(); ++i) {
        csv += std::to_string(i);
        csv += ',';
        csv += io::fmt(reports[i].sup_deviation);
        csv += ',';
        csv += std::to_string(reports[i].box_count);
        csv += '\n';
        sups.push_back(reports[i].sup_deviation);
    }
    em.emit("density.csv", csv);

    std::string boxes =
        "i,j,x_center,y_center,D,D_parity,theta_ref,deviation\n";
    for (const BoxDensity& b : reports.front().boxes) {
        boxes += std::to_string(b.i) + ',' + std::to_string(b.j) + ',' +
                 io::fmt(b.x_center) + ',' + io::fmt(b.y_center) + ',' +
                 io::fmt(b.D) + ',' + io::fmt(b.D_parity) + ',' +
                 io::fmt(b.theta_ref) + ',' + io::fmt(b.deviation) + '\n';
    }
    em.emit("boxes.csv", boxes);
    if (p.at("svg").get<bool>())
        em.emit("deviation.svg", deviation_heatmap_svg(grid, reports.front()));

    json meta;
    meta["seed"] = opt.seed;
    meta["beta"] = beta;
    meta["t"] = t;
    meta["a"] = a;
    meta["eta"] = eta;
    meta["N"] = grid.N;
    meta["box_side"] = grid.side;
    meta["lambda_boxes"] = grid.lambda_count();
    meta["replicates"] = reps;
    meta["median_sup_deviation"] = stats::median(sups);
    em.emit("density.json", meta.dump(2) + "\n");
    return reps + table_reps;
}

int64_t exec_fluct(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    int64_t table_reps = 0;
    const SpeedTable speeds = resolve_speed_table(cfg, em, &table_reps);
    const VarianceTable vars = resolve_variance_table(cfg, em, &table_reps);
    PoissonParams params;
    params.beta = p.at("beta").get<double>();
    params.t = p.at("t").get<double>();
    const auto u_grid = p.at("u_grid").get<std::vector<double>>();
    const auto reps = p.at("replicates").get<int64_t>();
    const EstimateOptions opt = options_of(cfg);

    const EdgeFunctional samples =
        sample_W(params, u_grid, speeds, vars, reps, opt);

    std::string csv = "replicate,u,W\n";
    for (size_t r = 0; r < samples.W.size(); ++r)
        for (size_t j = 0; j < u_grid.size(); ++j)
            csv += std::to_string(r) + ',' + io::fmt(u_grid[j]) + ',' +
                   io::fmt(samples.W[r][j]) + '\n';
    em.emit("wsamples.csv", csv);

    const double spacing = 2.0 / std::sqrt(samples.N);
    json per_u = json::array();
    for (size_t j = 0; j < u_grid.size(); ++j) {
        const std::vector<double> col = samples.column(j);
        const stats::NormalityResult norm =
            test_gaussianity(col, opt.seed, 2000, spacing);
        json d;
        d["u"] = u_grid[j];
        d["drift"] = samples.drift[j];
        d["V"] = samples.V[j];
        d["mean_W"] = stats::mean(col);
        d["stderr_mean"] =
            stats::stddev(col) / std::sqrt(static_cast<double>(col.size()));
        d["var_W"] = stats::variance(col);
        d["var_ratio"] = samples.V[j] > 0 ? stats::variance(col) / samples.V[j]
                                          : 0.0;
        d["normality_p"] = norm.p_value;
        d["skewness"] = norm.skewness;
        d["excess_kurtosis"] = norm.excess_kurtosis;
        per_u.push_back(d);
    }

    const IncrementReport inc = test_increment_independence(samples);
    json inc_json = json::array();
    for (const IncrementPair& pair : inc.pairs)
        inc_json.push_back({{"first", pair.first_increment},
                            {"second", pair.second_increment},
                            {"correlation", pair.correlation},
                            {"flagged", pair.flagged}});

    json meta;
    meta["seed"] = opt.seed;
    meta["beta"] = params.beta;
    meta["t"] = params.t;
    meta["N"] = samples.N;
    meta["replicates"] = reps;
    meta["survivors"] = samples.W.size();
    meta["discard_fraction"] = samples.discard_fraction();
    meta["variance_clamped"] = samples.variance_clamped;
    meta["per_u"] = per_u;
    meta["increment_correlations"] = inc_json;
    meta["any_increment_flagged"] = inc.any_flagged;
    em.emit("fluct_report.json", meta.dump(2) + "\n");

    if (p.at("break_points").get<bool>()) {
        const BreakPointTrace trace = detect_break_points(
            params, EdgeSampler(opt.seed, 0),
            p.at("scan_fraction").get<double>());
        std::string bp = "T,r\n";
        for (size_t i = 0; i < trace.heights.size(); ++i)
            bp += std::to_string(trace.heights[i]) + ',' +
                  std::to_string(trace.positions[i]) + '\n';
        em.emit("breakpoints.csv", bp);
    }
    return reps + table_reps;
}

int64_t exec_exponent(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    const auto t_list = p.at("t_list").get<std::vector<double>>();
    const auto reps = p.at("replicates").get<int64_t>();
    const EstimateOptions opt = options_of(cfg);
    const HeightFluctuationFit fit =
        fit_height_exponent(p.at("beta").get<double>(), t_list, reps, opt);

    std::string csv = "t,N,sd_height\n";
    for (size_t i = 0; i < fit.t_values.size(); ++i)
        csv += io::fmt(fit.t_values[i]) + ',' + io::fmt(fit.N_values[i]) + ',' +
               io::fmt(fit.sd_heights[i]) + '\n';
    em.emit("exponent.csv", csv);

    json meta;
    meta["seed"] = opt.seed;
    meta["beta"] = p.at("beta").get<double>();
    meta["replicates"] = reps;
    meta["b_hat"] = fit.b_hat;
    meta["stderr"] = fit.stderr_;
    meta["r_squared"] = fit.r_squared;
    meta["insufficient_range"] = fit.insufficient_range;
    meta["reference_exponent"] = kNuParallel / (1.0 + kNuParallel);
    em.emit("exponent.json", meta.dump(2) + "\n");
    return reps * static_cast<int64_t>(t_list.size());
}

int64_t exec_render(const ExperimentConfig& cfg, Emitter& em) {
    const json& p = cfg.params;
    const Cluster cluster =
        io::parse_cluster_csv(p.at("input").get<std::string>());
    io::RenderOptions ropt;
    ShapeCurve curve;
    if (p.contains("beta") && p.contains("t")) {
        PoissonParams params;
        params.beta = p.at("beta").get<double>();
        params.t = p.at("t").get<double>();
        ropt.N = height_scale(kPc, params);
        ropt.t = params.t;
        if (p.contains("shape_csv")) {
            curve = io::parse_shape_csv(p.at("shape_csv").get<std::string>(),
                                        params.beta);
            ropt.overlay = &curve;
            ropt.eta = p.at("eta").get<double>();
        }
    }
    em.emit("render.svg", io::render_cluster_svg(cluster, ropt));
    return 1;
}

}  // namespace

ExperimentReport run(const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    const auto start = std::chrono::steady_clock::now();

    fs::create_directories(config.out_dir);
    Emitter em{config.out_dir, {}};

    // The experiment's identity: parameters + seed, defaults applied.
    json echo = config.params;
    echo["kind"] = kind_name(config.kind);
    const std::string canonical = echo.dump(2) + "\n";
    const std::string hash = io::fnv1a_hex(canonical);
    em.emit("config.json", canonical);

    int64_t replicates = 0;
    switch (config.kind) {
        case ExperimentKind::Simulate: replicates = exec_simulate(config, em); break;
        case ExperimentKind::EstimateAlpha:
        case ExperimentKind::EstimateTheta:
        case ExperimentKind::EstimateSigma2:
            replicates = exec_estimate(config, em);
            break;
        case ExperimentKind::Tails: replicates = exec_tails(config, em); break;
        case ExperimentKind::Shape: replicates = exec_shape(config, em); break;
        case ExperimentKind::Envelope: replicates = exec_envelope(config, em); break;
        case ExperimentKind::Density: replicates = exec_density(config, em); break;
        case ExperimentKind::Fluct: replicates = exec_fluct(config, em); break;
        case ExperimentKind::Exponent: replicates = exec_exponent(config, em); break;
        case ExperimentKind::Render: replicates = exec_render(config, em); break;
    }

    json manifest;
    manifest["config_hash"] = hash;
    manifest["kind"] = kind_name(config.kind);
    manifest["replicates"] = replicates;
    json files = json::array();
    for (const FileEntry& f : em.files)
        files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
    manifest["files"] = files;
    io::write_text(config.out_dir / "manifest.json", manifest.dump(2) + "\n");

    const auto end = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.config = echo;
    report.config_hash = hash;
    report.files = em.files;  // manifest.json lists everything but itself
    report.out_dir = config.out_dir;
    report.wall_ms =
        std::chrono::duration<double, std::milli>(end - start).count();
    report.replicates = replicates;
    report.replicates_per_s =
        report.wall_ms > 0 ? 1000.0 * replicates / report.wall_ms : 0.0;
    return report;
}

}  // namespace oplab
