#include "shiftres/config.hpp"

#include "shiftres/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace shiftres {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, int line) {
    if (v == "pi")
        return std::numbers::pi;
    if (v.starts_with("pi/")) {
        const double d = to_double(v.substr(3), line);
        if (d == 0.0)
            throw ConfigError("division by zero in '" + v + "'", line);
        return std::numbers::pi / d;
    }
    double out = 0.0;
    const char* first = v.data() + (v.starts_with('+') ? 1 : 0);
    const auto res = std::from_chars(first, v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError("expected a number, got '" + v + "'", line);
    return out;
}

std::uint64_t to_count(const std::string& v, int line) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError("expected a non-negative integer, got '" + v + "'", line);
    return out;
}

bool to_bool(const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ConfigError("expected true or false, got '" + v + "'", line);
}

std::vector<std::size_t> to_counts(const std::string& v, int line) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<std::size_t>(to_count(trim(item), line)));
    if (out.empty())
        throw ConfigError("expected a comma-separated list", line);
    return out;
}

using Setter = std::function<void(SweepConfig&, const std::string&, int)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"task",
         [](SweepConfig& c, const std::string& v, int l) {
             try {
                 c.task = parse_task(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what(), l);
             }
         }},
        {"kind",
         [](SweepConfig& c, const std::string& v, int l) {
             try {
                 c.kind = parse_reservoir_kind(v);
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what(), l);
             }
         }},
        {"m1", [](SweepConfig& c, const std::string& v, int l) { c.m1 = to_counts(v, l); }},
        {"m2", [](SweepConfig& c, const std::string& v, int l) { c.m2 = to_counts(v, l); }},
        {"tau_max", [](SweepConfig& c, const std::string& v, int l) { c.tau_max = to_double(v, l); }},
        {"realizations",
         [](SweepConfig& c, const std::string& v, int l) { c.realizations = to_count(v, l); }},
        {"n_train",
         [](SweepConfig& c, const std::string& v, int l) { c.lengths.n_train = to_count(v, l); }},
        {"n_test",
         [](SweepConfig& c, const std::string& v, int l) { c.lengths.n_test = to_count(v, l); }},
        {"transient",
         [](SweepConfig& c, const std::string& v, int l) {
             c.lengths.driver_transient = to_count(v, l);
         }},
        {"reservoir_transient",
         [](SweepConfig& c, const std::string& v, int l) {
             c.lengths.reservoir_transient = to_count(v, l);
         }},
        {"ridge",
         [](SweepConfig& c, const std::string& v, int l) { c.ridge_relative = to_double(v, l); }},
        {"seed", [](SweepConfig& c, const std::string& v, int l) { c.seed = to_count(v, l); }},
        {"opto.tl",
         [](SweepConfig& c, const std::string& v, int l) { c.opto.filter_time = to_double(v, l); }},
        {"opto.beta",
         [](SweepConfig& c, const std::string& v, int l) { c.opto.beta = to_double(v, l); }},
        {"opto.rho",
         [](SweepConfig& c, const std::string& v, int l) { c.opto.rho_in = to_double(v, l); }},
        {"opto.phi",
         [](SweepConfig& c, const std::string& v, int l) { c.opto.phi = to_double(v, l); }},
        {"opto.theta",
         [](SweepConfig& c, const std::string& v, int l) { c.opto.theta = to_count(v, l); }},
        {"augment_squares",
         [](SweepConfig& c, const std::string& v, int l) {
             if (v == "auto")
                 c.augment_squares.reset();
             else
                 c.augment_squares = to_bool(v, l);
         }},
        {"compute_mc",
         [](SweepConfig& c, const std::string& v, int l) { c.compute_memory = to_bool(v, l); }},
        {"mc_length",
         [](SweepConfig& c, const std::string& v, int l) { c.memory_length = to_count(v, l); }},
        {"mc_kmax",
         [](SweepConfig& c, const std::string& v, int l) { c.memory_k_max = to_count(v, l); }},
        {"scatter.sizes",
         [](SweepConfig& c, const std::string& v, int l) { c.scatter.sizes = to_counts(v, l); }},
        {"scatter.count",
         [](SweepConfig& c, const std::string& v, int l) { c.scatter.count = to_count(v, l); }},
        {"scatter.bin_width",
         [](SweepConfig& c, const std::string& v, int l) { c.scatter.bin_width = to_double(v, l); }},
        {"protocol.drive",
         [](SweepConfig& c, const std::string& v, int l) { c.protocol.drive = to_count(v, l); }},
        {"protocol.reset",
         [](SweepConfig& c, const std::string& v, int l) { c.protocol.reset = to_count(v, l); }},
        {"protocol.test",
         [](SweepConfig& c, const std::string& v, int l) { c.protocol.test = to_count(v, l); }},
    };
    return table;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? ", " : "") + std::to_string(v[i]);
    return out;
}

} // namespace

SweepConfig parse_config(std::istream& is) {
    SweepConfig cfg;
    std::set<std::string> seen;
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(std::string_view(raw).substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + body + "'", line);
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("unknown key '" + key + "'", line);
        if (!seen.insert(key).second)
            throw ConfigError("duplicate key '" + key + "'", line);
        if (value.empty())
            throw ConfigError("missing value for '" + key + "'", line);
        it->second(cfg, value, line);
    }
    validate(cfg);
    return cfg;
}

SweepConfig parse_config_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

SweepConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(is);
}

std::string to_config_text(const SweepConfig& c, bool include_seed) {
    std::string s;
    s += fmt::format("task = {}\n", to_string(c.task));
    s += fmt::format("kind = {}\n", to_string(c.kind));
    s += fmt::format("m1 = {}\n", join(c.m1));
    s += fmt::format("m2 = {}\n", join(c.m2));
    s += fmt::format("tau_max = {}\n", c.tau_max);
    s += fmt::format("realizations = {}\n", c.realizations);
    s += fmt::format("n_train = {}\n", c.lengths.n_train);
    s += fmt::format("n_test = {}\n", c.lengths.n_test);
    s += fmt::format("transient = {}\n", c.lengths.driver_transient);
    s += fmt::format("reservoir_transient = {}\n", c.lengths.reservoir_transient);
    s += fmt::format("ridge = {}\n", c.ridge_relative);
    if (include_seed)
        s += fmt::format("seed = {}\n", c.seed);
    s += fmt::format("opto.tl = {}\n", c.opto.filter_time);
    s += fmt::format("opto.beta = {}\n", c.opto.beta);
    s += fmt::format("opto.rho = {}\n", c.opto.rho_in);
    s += fmt::format("opto.phi = {}\n", c.opto.phi);
    s += fmt::format("opto.theta = {}\n", c.opto.theta);
    s += fmt::format("augment_squares = {}\n",
                     c.augment_squares ? (*c.augment_squares ? "true" : "false") : "auto");
    s += fmt::format("compute_mc = {}\n", c.compute_memory ? "true" : "false");
    s += fmt::format("mc_length = {}\n", c.memory_length);
    s += fmt::format("mc_kmax = {}\n", c.memory_k_max);
    s += fmt::format("scatter.sizes = {}\n", join(c.scatter.sizes));
    s += fmt::format("scatter.count = {}\n", c.scatter.count);
    s += fmt::format("scatter.bin_width = {}\n", c.scatter.bin_width);
    s += fmt::format("protocol.drive = {}\n", c.protocol.drive);
    s += fmt::format("protocol.reset = {}\n", c.protocol.reset);
    s += fmt::format("protocol.test = {}\n", c.protocol.test);
    return s;
}

std::uint64_t config_hash(const SweepConfig& cfg) {
    // FNV-1a over the canonical text, which is stable across runs and builds.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_config_text(cfg, false)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const SweepConfig& cfg) {
    return fmt::format("{:016x}", config_hash(cfg));
}

} // namespace shiftres
