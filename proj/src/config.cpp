#include "hilbert/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hilbert/error.hpp"

namespace hilbert {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

// drops a trailing comment outside quotes
std::string strip_comment(const std::string& s) {
    bool q = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') q = !q;
        if (s[i] == '#' && !q) return s.substr(0, i);
    }
    return s;
}

double to_double(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    double x = 0.0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError("'" + key + "': expected a number, got '" + t + "'");
    return x;
}

long long to_int(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    long long x = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
        throw ConfigError("'" + key + "': expected an integer, got '" + t + "'");
    return x;
}

std::string to_str(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
    if (t.empty() || t.find_first_of(" \t\"") != std::string::npos)
        throw ConfigError("'" + key + "': expected a string, got '" + t + "'");
    return t;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ConfigError("'" + key + "': expected a list like [0.08, 0.04]");
    std::vector<double> out;
    std::string body = t.substr(1, t.size() - 2);
    if (trim(body).empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue; // trailing comma
        out.push_back(to_double(key, item));
    }
    return out;
}

} // namespace

std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::steady: return "steady";
    case Scenario::standing_wave: return "standing_wave";
    case Scenario::custom: return "custom";
    }
    return "?";
}

std::string to_string(Backend b) { return b == Backend::bgk ? "bgk" : "full_hard_sphere"; }

std::string to_string(ForcingMode f) { return f == ForcingMode::closure ? "closure" : "micro_moments"; }

void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "scenario") {
        auto s = to_str(key, value);
        if (s == "steady") c.scenario = Scenario::steady;
        else if (s == "standing_wave") c.scenario = Scenario::standing_wave;
        else if (s == "custom") c.scenario = Scenario::custom;
        else throw ConfigError("scenario: unknown value '" + s + "'");
    } else if (key == "amplitude") c.amplitude = to_double(key, value);
    else if (key == "wavenumber_index") c.wavenumber_index = static_cast<int>(to_int(key, value));
    else if (key == "custom_rho_modes") c.custom_rho_modes = to_list(key, value);
    else if (key == "custom_u_modes") c.custom_u_modes = to_list(key, value);
    else if (key == "n_x") c.n_x = static_cast<int>(to_int(key, value));
    else if (key == "length" || key == "L") c.length = to_double(key, value);
    else if (key == "n_per_axis") c.n_per_axis = static_cast<int>(to_int(key, value));
    else if (key == "v_max") c.v_max = to_double(key, value);
    else if (key == "epsilon_list") c.epsilon_list = to_list(key, value);
    else if (key == "t_final") c.t_final = to_double(key, value);
    else if (key == "dt") c.dt = to_double(key, value);
    else if (key == "sample_interval") c.sample_interval = to_double(key, value);
    else if (key == "dt_guard") c.dt_guard = to_double(key, value);
    else if (key == "k_trunc") c.k_trunc = static_cast<int>(to_int(key, value));
    else if (key == "beta") c.beta = to_double(key, value);
    else if (key == "K_eos") c.K_eos = to_double(key, value);
    else if (key == "rho_bar") c.rho_bar = to_double(key, value);
    else if (key == "backend") {
        auto s = to_str(key, value);
        if (s == "bgk") c.backend = Backend::bgk;
        else if (s == "full_hard_sphere" || s == "full") c.backend = Backend::full_hard_sphere;
        else throw ConfigError("backend: unknown value '" + s + "'");
    } else if (key == "bgk_rate_scale") c.bgk_rate_scale = to_double(key, value);
    else if (key == "forcing") {
        auto s = to_str(key, value);
        if (s == "micro_moments") c.forcing = ForcingMode::micro_moments;
        else if (s == "closure") c.forcing = ForcingMode::closure;
        else throw ConfigError("forcing: unknown value '" + s + "'");
    } else if (key == "remainder_amplitude") c.remainder_amplitude = to_double(key, value);
    else if (key == "seed") {
        auto s = to_int(key, value);
        if (s < 0) throw ConfigError("seed must be nonnegative");
        c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "output_dir") c.output_dir = to_str(key, value);
    else throw ConfigError("unknown key '" + key + "'");
}

RunConfig parse_config_string(const std::string& text) {
    RunConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string t = trim(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') throw ConfigError("line " + std::to_string(lineno) + ": tables are not supported");
        auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        try {
            set_config_value(c, key, t.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_string(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void validate(const RunConfig& c) {
    if (!(c.amplitude >= 0.0)) throw ConfigError("amplitude must be nonnegative");
    if (c.wavenumber_index < 1) throw ConfigError("wavenumber_index must be at least 1");
    if (c.n_x < 4 || c.n_x % 2) throw ConfigError("n_x must be even and at least 4");
    if (!(c.length > 0.0)) throw ConfigError("length must be positive");
    if (c.n_per_axis < 4 || c.n_per_axis % 2) throw ConfigError("n_per_axis must be even and at least 4");
    if (!(c.v_max > 0.0)) throw ConfigError("v_max must be positive");
    if (c.epsilon_list.empty()) throw ConfigError("epsilon_list must not be empty");
    for (std::size_t i = 0; i < c.epsilon_list.size(); ++i) {
        if (!(c.epsilon_list[i] > 0.0)) throw ConfigError("epsilon_list entries must be positive");
        if (i > 0 && !(c.epsilon_list[i] < c.epsilon_list[i - 1]))
            throw ConfigError("epsilon_list must be strictly decreasing");
    }
    if (!(c.t_final > 0.0)) throw ConfigError("t_final must be positive");
    if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(c.sample_interval > 0.0)) throw ConfigError("sample_interval must be positive");
    if (!(c.dt_guard >= 0.0)) throw ConfigError("dt_guard must be nonnegative");
    if (c.k_trunc != 1) throw ConfigError("k_trunc: only the first coefficient is implemented (k_trunc = 1)");
    if (!(c.beta >= 3.5)) throw ConfigError("beta must be at least 3.5");
    if (!(c.K_eos > 0.0) || !(c.rho_bar > 0.0)) throw ConfigError("K_eos and rho_bar must be positive");
    if (!(c.bgk_rate_scale > 0.0)) throw ConfigError("bgk_rate_scale must be positive");
    if (!(c.remainder_amplitude >= 0.0)) throw ConfigError("remainder_amplitude must be nonnegative");
    if (c.scenario == Scenario::standing_wave && !(c.amplitude < c.rho_bar))
        throw ConfigError("amplitude must be below rho_bar");
    if (c.output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

} // namespace hilbert
