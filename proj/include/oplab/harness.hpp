#ifndef OPLAB_HARNESS_HPP
#define OPLAB_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

// Experiment orchestration: validated configs, seeded parallel replicate
// execution, flat-file persistence, and the output manifest. Identical
// (config, seed) produce byte-identical CSV/JSON/SVG outputs regardless of
// the worker count; workers and the output directory are execution details
// and are excluded from the config echo and its hash.

namespace oplab {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field_name, const std::string& reason)
        : std::runtime_error("config field '" + field_name + "': " + reason),
          field(std::move(field_name)) {}
    std::string field;
};

enum class ExperimentKind {
    Simulate,
    EstimateAlpha,
    EstimateTheta,
    EstimateSigma2,
    Tails,
    Shape,
    Envelope,
    Density,
    Fluct,
    Exponent,
    Render,
};

ExperimentKind parse_kind(const std::string& name);
std::string kind_name(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Simulate;
    nlohmann::json params;  // experiment parameters (identity), incl. seed
    std::filesystem::path out_dir = "out";
    unsigned workers = 0;  // 0: OPLAB_WORKERS env or hardware concurrency

    // Parses the file, validates fields for `kind`, applies defaults, and
    // rejects unknown keys. CLI overrides are merged before validation.
    static ExperimentConfig load(const std::string& kind,
                                 const std::filesystem::path& config_file,
                                 const nlohmann::json& overrides = {});
    static ExperimentConfig from_json(const std::string& kind,
                                      nlohmann::json values);
};

struct FileEntry {
    std::string name;
    uint64_t bytes = 0;
    std::string fnv1a;
};

struct ExperimentReport {
    nlohmann::json config;    // effective parameters, defaults applied
    std::string config_hash;  // fnv1a over the canonical config dump
    std::vector<FileEntry> files;
    std::filesystem::path out_dir;
    double wall_ms = 0.0;
    int64_t replicates = 0;
    double replicates_per_s = 0.0;
};

ExperimentReport run(const ExperimentConfig& config);

}  // namespace oplab

#endif  // OPLAB_HARNESS_HPP
