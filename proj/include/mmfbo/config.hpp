#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mmfbo/common.hpp"

namespace mmfbo {

/// Flat key = value experiment configuration. Every knob the optimizer or the
/// study protocol exposes lives here; unknown keys are rejected so typos fail
/// loudly.
struct ExperimentConfig {
    std::string oracle;
    std::vector<std::string> methods{"mmfbo", "gp_on_g", "sfd"};
    int budget = 0;  // total evaluations, seed phase included
    int n0 = 0;      // 0 = max(10, 2d)
    int replications = 10;
    std::uint64_t seed = 1;
    std::vector<double> epsilons{0.10, 0.05};
    std::string out_dir = "results";
    int jobs = 1;
    double noise_sd = 0.0;

    double kappa0 = 2.0;
    double kappa_min = 0.1;
    double kappa_max = 10.0;
    double decay = 0.9;
    double boost = 1.5;
    int patience = 5;
    int pool_global = 512;
    int pool_local = 128;
    double top_q = 0.25;
    double local_frac = 0.05;
    double exclusion_radius = 1e-3;
    int exploit_every = 5;
    int refit_every = 10;
    double explained_threshold = 0.99;
    std::string vpi_readout = "total";  // or "product"

    bool operator==(const ExperimentConfig&) const = default;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" + v + "'");
    }
}

inline std::string shortest(double x) { return format_double(x); }

}  // namespace config_detail

inline void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using namespace config_detail;
    if (key == "oracle") cfg.oracle = value;
    else if (key == "methods") cfg.methods = split_csv(value);
    else if (key == "budget") cfg.budget = static_cast<int>(parse_int(key, value));
    else if (key == "n0") cfg.n0 = static_cast<int>(parse_int(key, value));
    else if (key == "replications") cfg.replications = static_cast<int>(parse_int(key, value));
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "epsilons") {
        cfg.epsilons.clear();
        for (const auto& tok : split_csv(value)) cfg.epsilons.push_back(parse_double(key, tok));
    } else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "jobs") cfg.jobs = static_cast<int>(parse_int(key, value));
    else if (key == "noise_sd") cfg.noise_sd = parse_double(key, value);
    else if (key == "kappa0") cfg.kappa0 = parse_double(key, value);
    else if (key == "kappa_min") cfg.kappa_min = parse_double(key, value);
    else if (key == "kappa_max") cfg.kappa_max = parse_double(key, value);
    else if (key == "decay") cfg.decay = parse_double(key, value);
    else if (key == "boost") cfg.boost = parse_double(key, value);
    else if (key == "patience") cfg.patience = static_cast<int>(parse_int(key, value));
    else if (key == "pool_global") cfg.pool_global = static_cast<int>(parse_int(key, value));
    else if (key == "pool_local") cfg.pool_local = static_cast<int>(parse_int(key, value));
    else if (key == "top_q") cfg.top_q = parse_double(key, value);
    else if (key == "local_frac") cfg.local_frac = parse_double(key, value);
    else if (key == "exclusion_radius") cfg.exclusion_radius = parse_double(key, value);
    else if (key == "exploit_every") cfg.exploit_every = static_cast<int>(parse_int(key, value));
    else if (key == "refit_every") cfg.refit_every = static_cast<int>(parse_int(key, value));
    else if (key == "explained_threshold") cfg.explained_threshold = parse_double(key, value);
    else if (key == "vpi_readout") cfg.vpi_readout = value;
    else throw ConfigError("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto stripped = config_detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = config_detail::trim(stripped.substr(0, eq));
        const auto value = config_detail::trim(stripped.substr(eq + 1));
        apply_config_key(cfg, key, value);
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Emits every key in a fixed order; parse(emit(cfg)) == cfg.
inline std::string emit_config(const ExperimentConfig& cfg) {
    using config_detail::shortest;
    std::ostringstream out;
    auto join = [](const auto& items, auto fmt) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i) s += ",";
            s += fmt(items[i]);
        }
        return s;
    };
    out << "oracle = " << cfg.oracle << "\n";
    out << "methods = " << join(cfg.methods, [](const std::string& s) { return s; }) << "\n";
    out << "budget = " << cfg.budget << "\n";
    out << "n0 = " << cfg.n0 << "\n";
    out << "replications = " << cfg.replications << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "epsilons = " << join(cfg.epsilons, [](double x) { return config_detail::shortest(x); }) << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    out << "jobs = " << cfg.jobs << "\n";
    out << "noise_sd = " << shortest(cfg.noise_sd) << "\n";
    out << "kappa0 = " << shortest(cfg.kappa0) << "\n";
    out << "kappa_min = " << shortest(cfg.kappa_min) << "\n";
    out << "kappa_max = " << shortest(cfg.kappa_max) << "\n";
    out << "decay = " << shortest(cfg.decay) << "\n";
    out << "boost = " << shortest(cfg.boost) << "\n";
    out << "patience = " << cfg.patience << "\n";
    out << "pool_global = " << cfg.pool_global << "\n";
    out << "pool_local = " << cfg.pool_local << "\n";
    out << "top_q = " << shortest(cfg.top_q) << "\n";
    out << "local_frac = " << shortest(cfg.local_frac) << "\n";
    out << "exclusion_radius = " << shortest(cfg.exclusion_radius) << "\n";
    out << "exploit_every = " << cfg.exploit_every << "\n";
    out << "refit_every = " << cfg.refit_every << "\n";
    out << "explained_threshold = " << shortest(cfg.explained_threshold) << "\n";
    out << "vpi_readout = " << cfg.vpi_readout << "\n";
    return out.str();
}

/// MMFBO_SEED / MMFBO_JOBS / MMFBO_OUT take precedence over the file.
inline void apply_env_overrides(ExperimentConfig& cfg) {
    if (const char* s = std::getenv("MMFBO_SEED")) cfg.seed = config_detail::parse_u64("MMFBO_SEED", s);
    if (const char* s = std::getenv("MMFBO_JOBS")) cfg.jobs = static_cast<int>(config_detail::parse_int("MMFBO_JOBS", s));
    if (const char* s = std::getenv("MMFBO_OUT")) cfg.out_dir = s;
}

}  // namespace mmfbo
