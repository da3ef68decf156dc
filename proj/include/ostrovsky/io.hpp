#pragma once

// File formats: field snapshots, CSV tables, SVG log-log plots, INI configs
// and run manifests.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/spectral.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace ostrovsky::io {

namespace fs = std::filesystem;

/// 17 significant digits: strtod gives back the same double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Strict decimal parse: the whole string must be consumed.
inline double parse_double(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    while (end != nullptr && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
    // ERANGE on underflow still returns the correctly rounded subnormal
    if (s.empty() || end == begin || *end != '\0' || (errno == ERANGE && std::isinf(v)))
        throw ConfigurationError(what + ": cannot parse '" + s + "' as a number");
    return v;
}

inline long long parse_integer(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(begin, &end, 10);
    while (end != nullptr && (*end == ' ' || *end == '\t' || *end == '\r')) ++end;
    if (s.empty() || end == begin || *end != '\0' || errno == ERANGE)
        throw ConfigurationError(what + ": cannot parse '" + s + "' as an integer");
    return v;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("write to " + path.string() + " failed");
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Snapshots

struct SnapshotHeader {
    int n = 0;
    double length = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    int k = 0;
    double t = 0.0;
};

struct Snapshot {
    SnapshotHeader header;
    std::vector<double> samples;

    Field field() const { return Field::from_samples(Grid(header.n, header.length), samples); }
};

inline std::string snapshot_text(const SnapshotHeader& h, std::span<const double> samples) {
    if (static_cast<int>(samples.size()) != h.n) throw ConfigurationError("snapshot sample count does not match n");
    std::string out = "{\"n\":" + std::to_string(h.n) + ",\"L\":" + format_double(h.length) + ",\"beta\":" + format_double(h.beta) +
                      ",\"gamma\":" + format_double(h.gamma) + ",\"k\":" + std::to_string(h.k) + ",\"t\":" + format_double(h.t) + "}\n";
    out.reserve(out.size() + samples.size() * 26);
    for (double v : samples) {
        out += format_double(v);
        out += '\n';
    }
    return out;
}

inline void write_snapshot(const fs::path& path, const SnapshotHeader& h, std::span<const double> samples) {
    write_text(path, snapshot_text(h, samples));
}

inline Snapshot parse_snapshot(const std::string& text, const std::string& name = "snapshot") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigurationError(name + ": empty file");
    Snapshot s;
    try {
        const auto j = nlohmann::json::parse(line);
        s.header.n = j.at("n").get<int>();
        s.header.length = j.at("L").get<double>();
        s.header.beta = j.at("beta").get<double>();
        s.header.gamma = j.at("gamma").get<double>();
        s.header.k = j.at("k").get<int>();
        s.header.t = j.at("t").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(name + ": bad header: " + e.what());
    }
    if (s.header.n <= 0) throw ConfigurationError(name + ": n must be positive");
    s.samples.reserve(s.header.n);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        s.samples.push_back(parse_double(line, name + " line " + std::to_string(lineno)));
    }
    if (static_cast<int>(s.samples.size()) != s.header.n)
        throw ConfigurationError(name + ": expected " + std::to_string(s.header.n) + " samples, found " + std::to_string(s.samples.size()));
    return s;
}

inline Snapshot read_snapshot(const fs::path& path) { return parse_snapshot(read_text(path), path.string()); }

// ---------------------------------------------------------------------------
// CSV

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    CsvTable& row() {
        rows_.emplace_back();
        return *this;
    }
    CsvTable& add(double v) { return cell(format_double(v)); }
    CsvTable& add(int v) { return cell(std::to_string(v)); }
    CsvTable& add(long long v) { return cell(std::to_string(v)); }
    CsvTable& add(std::uint64_t v) { return cell(std::to_string(v)); }
    CsvTable& add(bool v) { return cell(v ? "1" : "0"); }
    CsvTable& add(const std::string& v) { return cell(v); }
    CsvTable& add(const char* v) { return cell(v); }

    std::size_t size() const noexcept { return rows_.size(); }

    std::string text() const {
        std::string out;
        for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + columns_[c];
        out += '\n';
        for (const auto& r : rows_) {
            if (r.size() != columns_.size()) throw Error("csv row has " + std::to_string(r.size()) + " cells");
            for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
            out += '\n';
        }
        return out;
    }

    void write(const fs::path& path) const { write_text(path, text()); }

private:
    CsvTable& cell(std::string v) {
        if (rows_.empty()) throw Error("csv cell before row()");
        rows_.back().push_back(std::move(v));
        return *this;
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------------------
// SVG log-log plot

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string colour = "#1f77b4";
    bool markers = true;
    bool line = true;
};

struct LogLogPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace detail

/// Points with nonpositive or nonfinite coordinates are left out.
inline std::string svg_loglog(const LogLogPlot& plot) {
    constexpr double W = 640, H = 480, left = 80, right = 20, top = 40, bottom = 60;
    double lx0 = INFINITY, lx1 = -INFINITY, ly0 = INFINITY, ly1 = -INFINITY;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!(s.x[i] > 0.0 && s.y[i] > 0.0) || !std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            lx0 = std::min(lx0, std::log10(s.x[i]));
            lx1 = std::max(lx1, std::log10(s.x[i]));
            ly0 = std::min(ly0, std::log10(s.y[i]));
            ly1 = std::max(ly1, std::log10(s.y[i]));
        }
    if (!std::isfinite(lx0)) lx0 = 0, lx1 = 1, ly0 = 0, ly1 = 1;
    lx0 = std::floor(lx0), lx1 = std::ceil(lx1), ly0 = std::floor(ly0), ly1 = std::ceil(ly1);
    if (lx1 <= lx0) lx1 = lx0 + 1;
    if (ly1 <= ly0) ly1 = ly0 + 1;
    auto X = [&](double v) { return left + (std::log10(v) - lx0) / (lx1 - lx0) * (W - left - right); };
    auto Y = [&](double v) { return H - bottom - (std::log10(v) - ly0) / (ly1 - ly0) * (H - top - bottom); };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + detail::escape_xml(plot.title) + "</text>\n";
    out += "<g stroke=\"black\" fill=\"none\"><rect x=\"" + detail::px(left) + "\" y=\"" + detail::px(top) + "\" width=\"" +
           detail::px(W - left - right) + "\" height=\"" + detail::px(H - top - bottom) + "\"/></g>\n";
    for (int d = static_cast<int>(lx0); d <= static_cast<int>(lx1); ++d) {
        const double x = X(std::pow(10.0, d));
        out += "<line x1=\"" + detail::px(x) + "\" y1=\"" + detail::px(H - bottom) + "\" x2=\"" + detail::px(x) + "\" y2=\"" +
               detail::px(top) + "\" stroke=\"#ddd\"/>\n";
        out += "<text x=\"" + detail::px(x) + "\" y=\"" + detail::px(H - bottom + 18) + "\" text-anchor=\"middle\">1e" + std::to_string(d) + "</text>\n";
    }
    for (int d = static_cast<int>(ly0); d <= static_cast<int>(ly1); ++d) {
        const double y = Y(std::pow(10.0, d));
        out += "<line x1=\"" + detail::px(left) + "\" y1=\"" + detail::px(y) + "\" x2=\"" + detail::px(W - right) + "\" y2=\"" +
               detail::px(y) + "\" stroke=\"#ddd\"/>\n";
        out += "<text x=\"" + detail::px(left - 6) + "\" y=\"" + detail::px(y + 4) + "\" text-anchor=\"end\">1e" + std::to_string(d) + "</text>\n";
    }
    out += "<text x=\"" + detail::px(left + (W - left - right) / 2) + "\" y=\"" + detail::px(H - 16) + "\" text-anchor=\"middle\">" +
           detail::escape_xml(plot.x_label) + "</text>\n";
    out += "<text transform=\"translate(18," + detail::px(top + (H - top - bottom) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           detail::escape_xml(plot.y_label) + "</text>\n";
    int legend = 0;
    for (const auto& s : plot.series) {
        std::string pts;
        std::string dots;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!(s.x[i] > 0.0 && s.y[i] > 0.0) || !std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            pts += detail::px(X(s.x[i])) + "," + detail::px(Y(s.y[i])) + " ";
            if (s.markers)
                dots += "<circle cx=\"" + detail::px(X(s.x[i])) + "\" cy=\"" + detail::px(Y(s.y[i])) + "\" r=\"3\" fill=\"" + s.colour + "\"/>\n";
        }
        if (s.line && !pts.empty())
            out += "<polyline fill=\"none\" stroke=\"" + s.colour + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        out += dots;
        if (!s.label.empty()) {
            const double ly = top + 16 + 16 * legend++;
            out += "<line x1=\"" + detail::px(W - right - 150) + "\" y1=\"" + detail::px(ly - 4) + "\" x2=\"" + detail::px(W - right - 130) +
                   "\" y2=\"" + detail::px(ly - 4) + "\" stroke=\"" + s.colour + "\" stroke-width=\"2\"/>\n";
            out += "<text x=\"" + detail::px(W - right - 124) + "\" y=\"" + detail::px(ly) + "\">" + detail::escape_xml(s.label) + "</text>\n";
        }
    }
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

/// INI configuration ("[section]" headers, "key = value" lines). Every value
/// read is recorded in resolved(), defaults included, so the record alone
/// reproduces the run.
class Config {
public:
    Config() = default;

    static Config from_ini_text(const std::string& text, const std::string& name = "config") {
        Config c;
        std::istringstream in(text);
        try {
            boost::property_tree::ini_parser::read_ini(in, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigurationError(name + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
        }
        return c;
    }

    /// A manifest's "config" object: {section: {key: value}}.
    static Config from_resolved(const nlohmann::json& j) {
        Config c;
        if (!j.is_object()) throw ConfigurationError("manifest config must be an object");
        for (const auto& [section, keys] : j.items()) {
            if (!keys.is_object()) throw ConfigurationError("manifest section '" + section + "' must be an object");
            for (const auto& [key, value] : keys.items())
                c.tree_.put(boost::property_tree::ptree::path_type(section + "." + key, '.'),
                            value.is_string() ? value.get<std::string>() : value.dump());
        }
        return c;
    }

    /// .json files are read as manifests, anything else as INI.
    static Config load(const fs::path& path, nlohmann::json* manifest = nullptr) {
        const std::string text = read_text(path);
        if (path.extension() == ".json") {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(text);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigurationError(path.string() + ": " + e.what());
            }
            if (!j.contains("config")) throw ConfigurationError(path.string() + ": manifest has no config object");
            if (manifest != nullptr) *manifest = j;
            return from_resolved(j["config"]);
        }
        return from_ini_text(text, path.string());
    }

    bool has(const std::string& key) const { return raw(key).has_value(); }

    double get_double(const std::string& key) { return record(key, parse_double(required(key), key)); }
    double get_double(const std::string& key, double fallback) {
        const auto v = raw(key);
        return record(key, v ? parse_double(*v, key) : fallback);
    }

    int get_int(const std::string& key) { return record_int(key, to_int(parse_integer(required(key), key), key)); }
    int get_int(const std::string& key, int fallback) {
        const auto v = raw(key);
        return record_int(key, v ? to_int(parse_integer(*v, key), key) : fallback);
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) {
        const auto v = raw(key);
        std::uint64_t out = fallback;
        if (v) {
            const long long parsed = parse_integer(*v, key);
            if (parsed < 0) throw ConfigurationError(key + ": must be nonnegative");
            out = static_cast<std::uint64_t>(parsed);
        }
        put(key, std::to_string(out));
        return out;
    }

    bool get_bool(const std::string& key, bool fallback) {
        const auto v = raw(key);
        bool out = fallback;
        if (v) {
            if (*v == "true" || *v == "1" || *v == "yes") out = true;
            else if (*v == "false" || *v == "0" || *v == "no") out = false;
            else throw ConfigurationError(key + ": cannot parse '" + *v + "' as a boolean");
        }
        put(key, out ? "true" : "false");
        return out;
    }

    std::string get_string(const std::string& key) { return put(key, required(key)); }
    std::string get_string(const std::string& key, const std::string& fallback) {
        const auto v = raw(key);
        return put(key, v ? *v : fallback);
    }

    /// Comma-separated list of numbers.
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) {
        const auto v = raw(key);
        std::vector<double> out = fallback;
        if (v) {
            out.clear();
            std::stringstream ss(*v);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), key));
            if (out.empty()) throw ConfigurationError(key + ": empty list");
        }
        std::string text;
        for (std::size_t i = 0; i < out.size(); ++i) text += (i ? "," : "") + format_double(out[i]);
        put(key, text);
        return out;
    }

    /// Overrides a value (command-line flags); recorded like any other value.
    void set(const std::string& key, const std::string& value) { tree_.put(path(key), value); }

    const nlohmann::json& resolved() const noexcept { return resolved_; }

    /// Keys present in the input that no command read.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [section, keys] : tree_) {
            if (keys.empty()) {
                if (!keys.data().empty()) out.push_back(section);
                continue;
            }
            for (const auto& [key, value] : keys) {
                const std::string full = section + "." + key;
                if (!resolved_.contains(section) || !resolved_[section].contains(key)) out.push_back(full);
            }
        }
        return out;
    }

private:
    static boost::property_tree::ptree::path_type path(const std::string& key) {
        return boost::property_tree::ptree::path_type(key, '.');
    }

    std::optional<std::string> raw(const std::string& key) const {
        const auto v = tree_.get_optional<std::string>(path(key));
        if (!v) return std::nullopt;
        return trim(*v);
    }

    std::string required(const std::string& key) const {
        const auto v = raw(key);
        if (!v) throw ConfigurationError("missing required key '" + key + "'");
        return *v;
    }

    static int to_int(long long v, const std::string& key) {
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
            throw ConfigurationError(key + ": integer out of range");
        return static_cast<int>(v);
    }

    std::string put(const std::string& key, std::string value) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) throw Error("config keys take the form section.key");
        resolved_[key.substr(0, dot)][key.substr(dot + 1)] = value;
        return value;
    }

    double record(const std::string& key, double v) {
        put(key, format_double(v));
        return v;
    }

    int record_int(const std::string& key, int v) {
        put(key, std::to_string(v));
        return v;
    }

    boost::property_tree::ptree tree_;
    nlohmann::json resolved_ = nlohmann::json::object();
};

// ---------------------------------------------------------------------------
// Logging

/// Level from OSTROVSKY_LOG in {error, info, debug}; unset means info.
inline std::shared_ptr<spdlog::logger> logger() {
    static const auto instance = [] {
        auto l = spdlog::stderr_color_mt("ostrovsky");
        l->set_pattern("[%l] %v");
        spdlog::level::level_enum level = spdlog::level::info;
        std::string bad;
        if (const char* env = std::getenv("OSTROVSKY_LOG")) {
            const std::string v = env;
            if (v == "error") level = spdlog::level::err;
            else if (v == "info") level = spdlog::level::info;
            else if (v == "debug") level = spdlog::level::debug;
            else bad = v;
        }
        l->set_level(level);
        if (!bad.empty()) l->warn("OSTROVSKY_LOG='{}' not in {{error, info, debug}}; using info", bad);
        return l;
    }();
    return instance;
}

}  // namespace ostrovsky::io
