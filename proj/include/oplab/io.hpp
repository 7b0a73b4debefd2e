#ifndef OPLAB_IO_HPP
#define OPLAB_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oplab/cluster.hpp"
#include "oplab/estimators.hpp"
#include "oplab/shape.hpp"

// Flat-file plumbing: canonical float formatting (so identical numbers give
// identical bytes), FNV-1a content hashes, cluster CSV round-trip, and the
// SVG renderer.

namespace oplab::io {

std::string fmt(double v);  // shortest round-trip decimal

uint64_t fnv1a(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);
uint64_t fnv1a_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& body);

class MalformedInputError : public std::runtime_error {
public:
    MalformedInputError(const std::filesystem::path& path, size_t line,
                        const std::string& what)
        : std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                             what),
          line_number(line) {}
    size_t line_number;
};

// Cluster CSV: header "k,l,r,count[,runs]"; the optional runs column encodes
// the level's site set as lo:hi intervals (step 2) joined by '|'.
std::string cluster_csv(const Cluster& cluster, bool with_sites);
Cluster parse_cluster_csv(const std::filesystem::path& path);

// Estimator tables: "p,value,stderr,K,replicates".
std::string table_csv(const std::vector<TableRow>& rows);
std::vector<TableRow> parse_table_csv(const std::filesystem::path& path);

std::string shape_csv(const ShapeCurve& curve);
ShapeCurve parse_shape_csv(const std::filesystem::path& path, double beta);

struct RenderOptions {
    double N = 0.0;                // blue rule height; 0 disables
    const ShapeCurve* overlay = nullptr;
    double t = 0.0;                // needed with overlay
    double eta = 0.0;              // draws (1 +- eta) * Gamma_t when > 0
    int width_px = 900;
    // Clusters up to this many sites are drawn site by site; larger ones per
    // run, which is visually identical once sites are subpixel.
    int64_t per_site_limit = 20000;
};

std::string render_cluster_svg(const Cluster& cluster, const RenderOptions& opt);

}  // namespace oplab::io

#endif  // OPLAB_IO_HPP
