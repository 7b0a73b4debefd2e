#include "oplab/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace oplab::io {

std::string fmt(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, end);
}

uint64_t fnv1a(std::string_view bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string fnv1a_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a(ss.str());
}

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string cluster_csv(const Cluster& cluster, bool with_sites) {
    if (with_sites && cluster.levels.empty() && cluster.total_sites > 1)
        throw std::invalid_argument("cluster was grown without keep_levels");
    std::string out = with_sites ? "k,l,r,count,runs\n" : "k,l,r,count\n";
    for (size_t k = 0; k < cluster.profile.size(); ++k) {
        const LevelProfile& lp = cluster.profile[k];
        out += std::to_string(k);
        out += ',';
        out += std::to_string(lp.l);
        out += ',';
        out += std::to_string(lp.r);
        out += ',';
        out += std::to_string(lp.count);
        if (with_sites) {
            out += ',';
            const Level& lvl = cluster.levels[k];
            for (size_t i = 0; i < lvl.runs.size(); ++i) {
                if (i) out += '|';
                out += std::to_string(lvl.runs[i].lo);
                out += ':';
                out += std::to_string(lvl.runs[i].hi);
            }
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    size_t pos = 0;
    while (true) {
        const size_t next = s.find(sep, pos);
        parts.push_back(s.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return parts;
}

template <class T>
T parse_number(const std::string& s, const std::filesystem::path& path,
               size_t line) {
    T value{};
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw MalformedInputError(path, line, "bad number '" + s + "'");
    return value;
}

}  // namespace

Cluster parse_cluster_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    size_t line_no = 0;
    if (!std::getline(in, line))
        throw MalformedInputError(path, 1, "empty file");
    ++line_no;
    const bool with_sites = line == "k,l,r,count,runs";
    if (!with_sites && line != "k,l,r,count")
        throw MalformedInputError(path, 1, "unexpected header '" + line + "'");

    Cluster c;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != (with_sites ? 5u : 4u))
            throw MalformedInputError(path, line_no, "wrong column count");
        const auto k = parse_number<int64_t>(cols[0], path, line_no);
        if (k != static_cast<int64_t>(c.profile.size()))
            throw MalformedInputError(path, line_no, "heights must be 0,1,2,...");
        LevelProfile lp;
        lp.l = parse_number<int32_t>(cols[1], path, line_no);
        lp.r = parse_number<int32_t>(cols[2], path, line_no);
        lp.count = parse_number<int64_t>(cols[3], path, line_no);
        if (lp.l > lp.r)
            throw MalformedInputError(path, line_no, "l exceeds r");
        c.profile.push_back(lp);
        c.total_sites += lp.count;
        if (with_sites) {
            Level lvl;
            for (const std::string& part : split(cols[4], '|')) {
                const auto pair = split(part, ':');
                if (pair.size() != 2)
                    throw MalformedInputError(path, line_no,
                                              "bad run '" + part + "'");
                Run run{parse_number<int32_t>(pair[0], path, line_no),
                        parse_number<int32_t>(pair[1], path, line_no)};
                if (run.hi < run.lo || ((run.hi - run.lo) % 2) != 0)
                    throw MalformedInputError(path, line_no,
                                              "bad run '" + part + "'");
                lvl.runs.push_back(run);
            }
            if (lvl.empty())
                throw MalformedInputError(path, line_no, "empty runs column");
            c.levels.push_back(std::move(lvl));
        }
    }
    if (c.profile.empty())
        throw MalformedInputError(path, line_no, "no cluster rows");
    c.height = static_cast<int32_t>(c.profile.size()) - 1;
    return c;
}

std::string table_csv(const std::vector<TableRow>& rows) {
    std::string out = "p,value,stderr,K,replicates\n";
    for (const TableRow& r : rows) {
        out += fmt(r.p);
        out += ',';
        out += fmt(r.value);
        out += ',';
        out += fmt(r.stderr_);
        out += ',';
        out += std::to_string(r.K);
        out += ',';
        out += std::to_string(r.replicates);
        out += '\n';
    }
    return out;
}

std::vector<TableRow> parse_table_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    size_t line_no = 0;
    if (!std::getline(in, line) || line != "p,value,stderr,K,replicates")
        throw MalformedInputError(path, 1, "unexpected table header");
    ++line_no;
    std::vector<TableRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 5)
            throw MalformedInputError(path, line_no, "wrong column count");
        TableRow r;
        r.p = parse_number<double>(cols[0], path, line_no);
        r.value = parse_number<double>(cols[1], path, line_no);
        r.stderr_ = parse_number<double>(cols[2], path, line_no);
        r.K = parse_number<int32_t>(cols[3], path, line_no);
        r.replicates = parse_number<int64_t>(cols[4], path, line_no);
        rows.push_back(r);
    }
    if (rows.empty()) throw MalformedInputError(path, line_no, "no rows");
    return rows;
}

std::string shape_csv(const ShapeCurve& curve) {
    std::string out = "y,g\n";
    for (size_t i = 0; i < curve.y_grid().size(); ++i) {
        out += fmt(curve.y_grid()[i]);
        out += ',';
        out += fmt(curve.g_values()[i]);
        out += '\n';
    }
    return out;
}

ShapeCurve parse_shape_csv(const std::filesystem::path& path, double beta) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    size_t line_no = 0;
    if (!std::getline(in, line) || line != "y,g")
        throw MalformedInputError(path, 1, "unexpected shape header");
    ++line_no;
    std::vector<double> ys, gs;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 2)
            throw MalformedInputError(path, line_no, "wrong column count");
        ys.push_back(parse_number<double>(cols[0], path, line_no));
        gs.push_back(parse_number<double>(cols[1], path, line_no));
    }
    if (ys.size() < 2) throw MalformedInputError(path, line_no, "too few rows");
    return ShapeCurve(beta, std::move(ys), std::move(gs), ys.back());
}

std::string render_cluster_svg(const Cluster& cluster, const RenderOptions& opt) {
    // World box: x in [xmin, xmax], heights 0..top (plus headroom for the N rule).
    double xmin = -1, xmax = 1;
    for (const LevelProfile& lp : cluster.profile) {
        xmin = std::min(xmin, static_cast<double>(lp.l));
        xmax = std::max(xmax, static_cast<double>(lp.r));
    }
    double top = static_cast<double>(cluster.height);
    if (opt.N > 0.0) top = std::max(top, 1.05 * opt.N);
    top = std::max(top, 1.0);
    if (opt.overlay) {
        const double half =
            1.05 * (1.0 + opt.eta) * envelope(*opt.overlay, opt.t, top);
        xmin = std::min(xmin, -half);
        xmax = std::max(xmax, half);
    }

    const double margin = 10.0;
    const double scale = (opt.width_px - 2 * margin) / (xmax - xmin);
    const double height_px = top * scale + 2 * margin;
    auto X = [&](double x) { return margin + (x - xmin) * scale; };
    auto Y = [&](double y) { return height_px - margin - y * scale; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width_px
        << "\" height=\"" << fmt(height_px) << "\" viewBox=\"0 0 "
        << opt.width_px << " " << fmt(height_px) << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axis at x = 0.
    svg << "<line x1=\"" << fmt(X(0)) << "\" y1=\"" << fmt(Y(0)) << "\" x2=\""
        << fmt(X(0)) << "\" y2=\"" << fmt(Y(top)) << "\" stroke=\"#cccccc\" "
        << "stroke-width=\"0.5\"/>\n";

    const double px = std::max(scale, 0.2);  // minimum mark size
    svg << "<g fill=\"black\">\n";
    const bool per_site = !cluster.levels.empty() &&
                          cluster.total_sites <= opt.per_site_limit;
    if (per_site) {
        for (size_t k = 0; k < cluster.levels.size(); ++k)
            for (const Run& run : cluster.levels[k].runs)
                for (int32_t x = run.lo; x <= run.hi; x += 2)
                    svg << "<rect x=\"" << fmt(X(x) - px / 2) << "\" y=\""
                        << fmt(Y(static_cast<double>(k)) - px / 2)
                        << "\" width=\"" << fmt(px) << "\" height=\"" << fmt(px)
                        << "\"/>\n";
    } else if (!cluster.levels.empty()) {
        for (size_t k = 0; k < cluster.levels.size(); ++k)
            for (const Run& run : cluster.levels[k].runs)
                svg << "<rect x=\"" << fmt(X(run.lo - 1.0)) << "\" y=\""
                    << fmt(Y(static_cast<double>(k)) - px / 2) << "\" width=\""
                    << fmt((run.hi - run.lo + 2) * scale) << "\" height=\""
                    << fmt(px) << "\"/>\n";
    } else {
        // Profile-only cluster: draw the l..r extent per level.
        for (size_t k = 0; k < cluster.profile.size(); ++k) {
            const LevelProfile& lp = cluster.profile[k];
            svg << "<rect x=\"" << fmt(X(lp.l - 1.0)) << "\" y=\""
                << fmt(Y(static_cast<double>(k)) - px / 2) << "\" width=\""
                << fmt((lp.r - lp.l + 2) * scale) << "\" height=\"" << fmt(px)
                << "\" fill=\"#888888\"/>\n";
        }
    }
    svg << "</g>\n";

    if (opt.N > 0.0)
        svg << "<line x1=\"" << fmt(X(xmin)) << "\" y1=\"" << fmt(Y(opt.N))
            << "\" x2=\"" << fmt(X(xmax)) << "\" y2=\"" << fmt(Y(opt.N))
            << "\" stroke=\"blue\" stroke-width=\"1.5\"/>\n";

    if (opt.overlay) {
        auto polyline = [&](double factor, const char* color) {
            for (int sign : {-1, 1}) {
                svg << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1\" points=\"";
                const int steps = 200;
                for (int s = 0; s <= steps; ++s) {
                    const double y = top * s / steps;
                    const double gx =
                        sign * factor * envelope(*opt.overlay, opt.t, y);
                    svg << fmt(X(gx)) << ',' << fmt(Y(y)) << ' ';
                }
                svg << "\"/>\n";
            }
        };
        if (opt.eta > 0.0) {
            polyline(1.0 + opt.eta, "red");
            polyline(1.0 - opt.eta, "green");
        } else {
            polyline(1.0, "red");
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace oplab::io
