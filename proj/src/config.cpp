#include "ffl/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ffl/errors.hpp"
#include "json.hpp"

namespace ffl {

namespace {

// Minimal TOML-ish reader: [section] headers, key = value lines, '#'
// comments.  Values: numbers, booleans, "strings", flat arrays of numbers.
struct RawValue {
    enum Kind { Number, Bool, String, Array } kind = Number;
    double num = 0.0;
    bool b = false;
    std::string str;
    std::vector<double> arr;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

RawValue parse_value(const std::string& raw, int lineno) {
    RawValue v;
    std::string s = trim(raw);
    if (s.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value");
    if (s == "true" || s == "false") {
        v.kind = RawValue::Bool;
        v.b = (s == "true");
        return v;
    }
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ConfigError("line " + std::to_string(lineno) + ": unterminated string");
        v.kind = RawValue::String;
        v.str = s.substr(1, s.size() - 2);
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']')
            throw ConfigError("line " + std::to_string(lineno) + ": unterminated array");
        v.kind = RawValue::Array;
        std::string body = s.substr(1, s.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            char* end = nullptr;
            double d = std::strtod(item.c_str(), &end);
            if (end == item.c_str() || *end != '\0')
                throw ConfigError("line " + std::to_string(lineno) + ": bad array element '" + item + "'");
            v.arr.push_back(d);
        }
        return v;
    }
    char* end = nullptr;
    v.num = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ConfigError("line " + std::to_string(lineno) + ": cannot parse value '" + s + "'");
    return v;
}

using Table = std::map<std::string, RawValue>;

std::map<std::string, Table> parse_toml(const std::string& text) {
    std::map<std::string, Table> out;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            out[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out[section][key] = parse_value(line.substr(eq + 1), lineno);
    }
    return out;
}

double want_num(const Table& t, const std::string& key, double dflt) {
    auto it = t.find(key);
    if (it == t.end()) return dflt;
    if (it->second.kind != RawValue::Number)
        throw ConfigError("key '" + key + "' must be a number");
    return it->second.num;
}

std::string want_str(const Table& t, const std::string& key, const std::string& dflt) {
    auto it = t.find(key);
    if (it == t.end()) return dflt;
    if (it->second.kind != RawValue::String)
        throw ConfigError("key '" + key + "' must be a string");
    return it->second.str;
}

void check_keys(const Table& t, std::initializer_list<const char*> allowed,
                const std::string& section) {
    for (const auto& [k, v] : t) {
        bool ok = false;
        for (const char* a : allowed)
            if (k == a) ok = true;
        if (!ok) throw ConfigError("unknown key '" + k + "' in section [" + section + "]");
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    auto doc = parse_toml(text);
    RunConfig cfg;
    for (const auto& [section, t] : doc) {
        if (section == "norm") {
            check_keys(t, {"name", "eps", "a", "b"}, section);
            cfg.norm.name = want_str(t, "name", cfg.norm.name);
            for (const char* p : {"eps", "a", "b"})
                if (t.count(p)) cfg.norm.params[p] = want_num(t, p, 0.0);
        } else if (section == "grid") {
            check_keys(t, {"nx", "ntheta"}, section);
            cfg.grid.nx = (int)want_num(t, "nx", cfg.grid.nx);
            cfg.grid.ntheta = (int)want_num(t, "ntheta", cfg.grid.ntheta);
        } else if (section == "time") {
            check_keys(t, {"T", "dt", "snap_every"}, section);
            cfg.time.T = want_num(t, "T", cfg.time.T);
            cfg.time.dt = want_num(t, "dt", cfg.time.dt);
            cfg.time.snap_every = (int)want_num(t, "snap_every", cfg.time.snap_every);
        } else if (section == "heat") {
            check_keys(t, {"u0", "amplitude"}, section);
            cfg.heat.u0 = want_str(t, "u0", cfg.heat.u0);
            cfg.heat.amplitude = want_num(t, "amplitude", cfg.heat.amplitude);
        } else if (section == "tolerances") {
            check_keys(t, {"delta_grad", "s_gate"}, section);
            cfg.tolerances.delta_grad = want_num(t, "delta_grad", cfg.tolerances.delta_grad);
            cfg.tolerances.s_gate = want_num(t, "s_gate", cfg.tolerances.s_gate);
        } else if (section == "harnack") {
            check_keys(t, {"theta", "eps"}, section);
            cfg.harnack.theta = want_num(t, "theta", cfg.harnack.theta);
            cfg.harnack.eps = want_num(t, "eps", cfg.harnack.eps);
        } else if (section == "output") {
            check_keys(t, {"dir", "seed"}, section);
            cfg.output_dir = want_str(t, "dir", cfg.output_dir);
            cfg.seed = (unsigned)want_num(t, "seed", cfg.seed);
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void RunConfig::validate() const {
    static const std::vector<std::string> norms = {"euclidean", "riemannian_diag",
                                                   "riemannian_conformal", "quartic"};
    bool known = false;
    for (const auto& n : norms)
        if (norm.name == n) known = true;
    if (!known) throw ConfigError("unknown norm '" + norm.name + "'");
    if (grid.nx < 16 || grid.nx % 2 != 0)
        throw ConfigError("grid.nx must be even and >= 16");
    if (grid.ntheta < 16 || grid.ntheta % 2 != 0)
        throw ConfigError("grid.ntheta must be even and >= 16");
    if (!(time.T > 0.0)) throw ConfigError("time.T must be positive");
    if (time.dt < 0.0) throw ConfigError("time.dt must be >= 0");
    if (time.snap_every < 1) throw ConfigError("time.snap_every must be >= 1");
    if (heat.u0 != "cos_x1" && heat.u0 != "cos_x1_cos_x2" && heat.u0 != "bump")
        throw ConfigError("unknown heat.u0 preset '" + heat.u0 + "'");
    if (!(heat.amplitude > -1.0 && heat.amplitude < 1.0) || heat.amplitude == 0.0)
        throw ConfigError("heat.amplitude must lie in (-1,1) and be nonzero");
    if (!(tolerances.delta_grad > 0.0)) throw ConfigError("tolerances.delta_grad must be positive");
    if (!(tolerances.s_gate > 0.0)) throw ConfigError("tolerances.s_gate must be positive");
    if (!(harnack.theta > 1.0)) throw ConfigError("harnack.theta must exceed 1");
    if (!(harnack.eps > 0.5)) throw ConfigError("harnack.eps must exceed 1/2");
}

std::string dump_config(const RunConfig& cfg) {
    nlohmann::json j;
    j["norm"]["name"] = cfg.norm.name;
    for (const auto& [k, v] : cfg.norm.params) j["norm"][k] = v;
    j["grid"]["nx"] = cfg.grid.nx;
    j["grid"]["ntheta"] = cfg.grid.ntheta;
    j["time"]["T"] = cfg.time.T;
    j["time"]["dt"] = cfg.time.dt;
    j["time"]["snap_every"] = cfg.time.snap_every;
    j["heat"]["u0"] = cfg.heat.u0;
    j["heat"]["amplitude"] = cfg.heat.amplitude;
    j["tolerances"]["delta_grad"] = cfg.tolerances.delta_grad;
    j["tolerances"]["s_gate"] = cfg.tolerances.s_gate;
    j["harnack"]["theta"] = cfg.harnack.theta;
    j["harnack"]["eps"] = cfg.harnack.eps;
    j["output"]["dir"] = cfg.output_dir;
    j["output"]["seed"] = cfg.seed;
    return j.dump(2);
}

}  // namespace ffl
