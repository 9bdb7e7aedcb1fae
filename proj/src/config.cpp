#include "nlss/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlss {

namespace toml {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << "config line " << line << ": " << what;
    throw std::runtime_error(msg.str());
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

using Scalar = std::variant<std::string, double, std::int64_t, bool>;

Scalar parse_scalar(const std::string& raw, std::size_t line) {
    std::string s = trim(raw);
    if (s.empty()) fail(line, "missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            if (s[i] == '\\' && i + 2 < s.size()) {
                char c = s[++i];
                if (c == 'n') out.push_back('\n');
                else if (c == 't') out.push_back('\t');
                else out.push_back(c);
            } else {
                out.push_back(s[i]);
            }
        }
        return out;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    const bool looks_float = s.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (looks_float) {
            double v = std::stod(s, &used);
            if (used != s.size()) fail(line, "malformed number '" + s + "'");
            return v;
        }
        std::int64_t v = std::stoll(s, &used, 10);
        if (used != s.size()) fail(line, "malformed number '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(line, "unrecognized value '" + s + "'");
    } catch (const std::out_of_range&) {
        fail(line, "number out of range '" + s + "'");
    }
}

Value parse_value(const std::string& raw, std::size_t line) {
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated array");
        std::vector<Scalar> items;
        std::string body = s.substr(1, s.size() - 2);
        std::string piece;
        bool quoted = false;
        for (char c : body) {
            if (c == '"') quoted = !quoted;
            if (c == ',' && !quoted) {
                if (!trim(piece).empty()) items.push_back(parse_scalar(piece, line));
                piece.clear();
            } else {
                piece.push_back(c);
            }
        }
        if (!trim(piece).empty()) items.push_back(parse_scalar(piece, line));
        return items;
    }
    Scalar sc = parse_scalar(s, line);
    return std::visit([](auto&& v) -> Value { return v; }, sc);
}

}  // namespace

std::map<std::string, Table> parse_text(const std::string& text) {
    std::map<std::string, Table> tables;
    std::string current;  // "" = root table
    std::istringstream in(text);
    std::string rawline;
    std::size_t lineno = 0;

    while (std::getline(in, rawline)) {
        ++lineno;
        std::string line = trim(strip_comment(rawline));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(lineno, "unterminated table header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) fail(lineno, "empty table name");
            tables[current];  // tables may stay empty
            continue;
        }

        std::size_t eq = std::string::npos;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '=' && !quoted) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(lineno, "empty key");
        tables[current][key] = parse_value(line.substr(eq + 1), lineno);
    }
    return tables;
}

std::map<std::string, Table> parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str());
}

}  // namespace toml

namespace {

using toml::Table;
using toml::Value;

[[noreturn]] void cfg_fail(const std::string& what) {
    throw std::runtime_error("config error: " + what);
}

const Value* find(const Table& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

std::string get_string(const Table& t, const std::string& key, const std::string& fallback) {
    const Value* v = find(t, key);
    if (!v) return fallback;
    if (auto* s = std::get_if<std::string>(v)) return *s;
    cfg_fail("'" + key + "' must be a string");
}

double get_number(const Table& t, const std::string& key, double fallback) {
    const Value* v = find(t, key);
    if (!v) return fallback;
    if (auto* d = std::get_if<double>(v)) return *d;
    if (auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    cfg_fail("'" + key + "' must be a number");
}

bool get_bool(const Table& t, const std::string& key, bool fallback) {
    const Value* v = find(t, key);
    if (!v) return fallback;
    if (auto* b = std::get_if<bool>(v)) return *b;
    cfg_fail("'" + key + "' must be a boolean");
}

std::vector<double> get_number_list(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) return {};
    using List = std::vector<std::variant<std::string, double, std::int64_t, bool>>;
    if (auto* list = std::get_if<List>(v)) {
        std::vector<double> out;
        for (const auto& item : *list) {
            if (auto* d = std::get_if<double>(&item)) out.push_back(*d);
            else if (auto* i = std::get_if<std::int64_t>(&item)) out.push_back(static_cast<double>(*i));
            else cfg_fail("'" + key + "' must hold numbers");
        }
        return out;
    }
    cfg_fail("'" + key + "' must be an array");
}

MethodSpec parse_method(const std::string& name, const Table& t, const DenoiseConfig& base) {
    MethodSpec spec;
    spec.name = name;
    spec.cfg = base;

    const std::string family = get_string(t, "family", "msvd");
    if (family == "identity") {
        spec.identity = true;
        return spec;
    }
    if (family == "msvd") spec.cfg.filter.family = FilterFamily::msvd;
    else if (family == "hosvd4d") spec.cfg.filter.family = FilterFamily::hosvd4d;
    else cfg_fail("method '" + name + "': unknown family '" + family + "'");

    GroupingParams& g = spec.cfg.grouping;
    const double patch = get_number(t, "patch", 0.0);
    if (patch > 0.0) g.patch_h = g.patch_w = static_cast<std::size_t>(patch);
    g.patch_h = static_cast<std::size_t>(get_number(t, "patch_h", static_cast<double>(g.patch_h)));
    g.patch_w = static_cast<std::size_t>(get_number(t, "patch_w", static_cast<double>(g.patch_w)));
    g.patch_depth =
        static_cast<std::size_t>(get_number(t, "patch_depth", static_cast<double>(g.patch_depth)));
    g.group_size =
        static_cast<std::size_t>(get_number(t, "group_size", static_cast<double>(g.group_size)));
    g.search_radius = static_cast<std::size_t>(
        get_number(t, "search_radius", static_cast<double>(g.search_radius)));
    g.ref_stride =
        static_cast<std::size_t>(get_number(t, "ref_stride", static_cast<double>(g.ref_stride)));

    const std::string dist = get_string(t, "distance_channel", "auto");
    if (dist == "luminance") {
        g.distance_channel = DistanceChannel::luminance;
        spec.auto_color = false;
    } else if (dist == "first_channel") {
        g.distance_channel = DistanceChannel::first_channel;
        spec.auto_color = false;
    } else if (dist == "all_channels") {
        g.distance_channel = DistanceChannel::all_channels;
        spec.auto_color = false;
    } else if (dist != "auto") {
        cfg_fail("method '" + name + "': unknown distance_channel '" + dist + "'");
    }

    const std::string color = get_string(t, "color_mode", "auto");
    if (color == "none") {
        spec.cfg.filter.color_mode = ColorMode::none;
        spec.auto_color = false;
    } else if (color == "opponent") {
        spec.cfg.filter.color_mode = ColorMode::opponent;
        spec.auto_color = false;
    } else if (color != "auto") {
        cfg_fail("method '" + name + "': unknown color_mode '" + color + "'");
    }

    spec.cfg.filter.lambda = get_number(t, "lambda", spec.cfg.filter.lambda);
    const std::string weight = get_string(t, "weight_mode", "uniform");
    if (weight == "uniform") spec.cfg.weight_mode = WeightMode::uniform;
    else if (weight == "inverse_retained") spec.cfg.weight_mode = WeightMode::inverse_retained;
    else cfg_fail("method '" + name + "': unknown weight_mode '" + weight + "'");

    spec.cfg.clip_output = get_bool(t, "clip_output", true);
    spec.fixed_sigma = get_number(t, "sigma", -1.0);
    return spec;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    auto tables = toml::parse_file(path);
    ExperimentConfig cfg;

    auto dataset = tables.find("dataset");
    if (dataset == tables.end()) cfg_fail("missing [dataset] table");
    cfg.dataset_path = get_string(dataset->second, "path", "");
    if (cfg.dataset_path.empty()) cfg_fail("dataset path is required");

    const std::string kind = get_string(dataset->second, "kind", "image2d");
    if (kind == "image2d") cfg.kind = ExperimentConfig::Kind::image2d;
    else if (kind == "volume3d") cfg.kind = ExperimentConfig::Kind::volume3d;
    else cfg_fail("unknown dataset kind '" + kind + "'");

    const std::string mode = get_string(dataset->second, "mode", "synthetic");
    if (mode == "synthetic") cfg.mode = ExperimentConfig::Mode::synthetic;
    else if (mode == "paired") cfg.mode = ExperimentConfig::Mode::paired;
    else cfg_fail("unknown dataset mode '" + mode + "'");

    if (auto noise = tables.find("noise"); noise != tables.end()) {
        const std::string nk = get_string(noise->second, "kind", "awgn");
        if (nk == "awgn") cfg.noise_kind = NoiseKind::awgn;
        else if (nk == "rician") cfg.noise_kind = NoiseKind::rician;
        else cfg_fail("unknown noise kind '" + nk + "'");
        cfg.sigmas = get_number_list(noise->second, "sigmas");
        cfg.sigmas_pct = get_number_list(noise->second, "sigmas_pct");
        cfg.clip_noisy = get_bool(noise->second, "clip", false);
    }
    if (cfg.mode == ExperimentConfig::Mode::synthetic && cfg.sigmas.empty() &&
        cfg.sigmas_pct.empty())
        cfg_fail("synthetic mode needs [noise] sigmas or sigmas_pct");

    if (auto run = tables.find("run"); run != tables.end()) {
        cfg.seed = static_cast<std::uint64_t>(get_number(run->second, "seed", 0.0));
        cfg.workers = static_cast<int>(get_number(run->second, "workers", 1.0));
        cfg.save_outputs = get_bool(run->second, "save_outputs", false);
    }
    if (auto output = tables.find("output"); output != tables.end())
        cfg.output_dir = get_string(output->second, "dir", cfg.output_dir);
    if (auto metrics = tables.find("metrics"); metrics != tables.end()) {
        cfg.metric_sam = get_bool(metrics->second, "sam", false);
        cfg.metric_ergas = get_bool(metrics->second, "ergas", false);
    }

    const DenoiseConfig base_cfg = cfg.kind == ExperimentConfig::Kind::volume3d
                                       ? DenoiseConfig::volume3d_defaults()
                                       : DenoiseConfig::image2d_defaults();
    for (const auto& [table_name, table] : tables) {
        constexpr const char* prefix = "method.";
        if (table_name.rfind(prefix, 0) != 0) continue;
        std::string name = table_name.substr(7);
        if (name.empty()) cfg_fail("method table needs a name: [method.<name>]");
        cfg.methods.push_back(parse_method(name, table, base_cfg));
    }
    if (cfg.methods.empty()) cfg_fail("at least one [method.<name>] table is required");
    return cfg;
}

}  // namespace nlss
