#pragma once

// Scenario configuration: flat INI-style sections of key = value lines.
// Parsing reports the offending key and line; serializing a parsed config
// and re-parsing it reproduces the same structure, which keeps test
// fixtures diffable.

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evosim/errors.hpp"
#include "evosim/grid.hpp"

namespace evosim {

enum class EmMaterialType { Isotropic, Bianisotropic, Chiral, Omega };
enum class ForcingSupport { Elastic, Em, All };

struct ScenarioConfig {
    // [grid]
    Index3 cells{8, 8, 8};
    std::array<double, 3> spacing{0.125, 0.125, 0.125};
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    // [partition] axis-aligned boxes in cell coordinates, upper bounds
    // exclusive; an optional raster file (one byte per cell: 0 outside,
    // 1 elastic, 2 electromagnetic) overrides the boxes.
    std::array<int, 6> omega0{0, 0, 0, 0, 0, 0};
    std::array<int, 6> omega1{0, 0, 0, 0, 0, 0};
    std::string raster_file;

    // [material.elastic]
    double rho = 1.0;
    double lame_lambda = 1.0;
    double lame_mu = 1.0;

    // [material.em]
    EmMaterialType em_type = EmMaterialType::Isotropic;
    double epsilon = 1.0;
    double mu = 1.0;
    double sigma = 0.0;
    double kappa = 0.0;                        // bianisotropic cross coupling
    double chi = 0.0;                          // chiral coupling
    std::array<double, 3> chi_axis{0.0, 0.0, 0.0};  // omega coupling axis

    // [time]
    double dt = 0.0625;
    std::int64_t steps = 16;
    std::string scheme = "crank_nicolson";

    // [forcing]
    int component = 0;
    double amplitude = 1.0;
    std::array<double, 3> center{0.5, 0.5, 0.5};
    double width = 0.1;
    double onset = 0.0;
    double duration = 0.25;
    ForcingSupport support = ForcingSupport::Em;

    // [output]
    std::string out_directory = "out";
    std::int64_t cadence = 1;
    bool vtk = false;

    double nu = 1.0;
};

namespace detail {

inline std::string em_type_name(EmMaterialType t) {
    switch (t) {
        case EmMaterialType::Isotropic: return "isotropic";
        case EmMaterialType::Bianisotropic: return "bianisotropic";
        case EmMaterialType::Chiral: return "chiral";
        case EmMaterialType::Omega: return "omega";
    }
    return "isotropic";
}

inline std::string support_name(ForcingSupport s) {
    switch (s) {
        case ForcingSupport::Elastic: return "elastic";
        case ForcingSupport::Em: return "em";
        case ForcingSupport::All: return "all";
    }
    return "all";
}

inline std::string trim(const std::string &s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct KeyValue {
    std::string value;
    int line = 0;
};

} // namespace detail

inline ScenarioConfig parse_config(const std::string &text) {
    std::map<std::string, detail::KeyValue> kv;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (kv.count(full))
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
        kv[full] = {value, lineno};
    }

    ScenarioConfig cfg;
    std::map<std::string, bool> consumed;

    auto context = [](const std::string &key, const detail::KeyValue &v) {
        return "config key '" + key + "' (line " + std::to_string(v.line) + ")";
    };

    auto take = [&](const std::string &key) -> const detail::KeyValue * {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        consumed[key] = true;
        return &it->second;
    };

    auto parse_doubles = [&](const std::string &key, std::size_t n, double *out) {
        const detail::KeyValue *v = take(key);
        if (!v) return false;
        std::istringstream ss(v->value);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(ss >> out[i])) throw ConfigError(context(key, *v) + ": expected " + std::to_string(n) + " numbers");
        }
        std::string rest;
        if (ss >> rest) throw ConfigError(context(key, *v) + ": trailing content '" + rest + "'");
        return true;
    };

    auto parse_ints = [&](const std::string &key, std::size_t n, int *out) {
        const detail::KeyValue *v = take(key);
        if (!v) return false;
        std::istringstream ss(v->value);
        for (std::size_t i = 0; i < n; ++i) {
            if (!(ss >> out[i])) throw ConfigError(context(key, *v) + ": expected " + std::to_string(n) + " integers");
        }
        std::string rest;
        if (ss >> rest) throw ConfigError(context(key, *v) + ": trailing content '" + rest + "'");
        return true;
    };

    auto parse_string = [&](const std::string &key, std::string *out) {
        const detail::KeyValue *v = take(key);
        if (!v) return false;
        *out = v->value;
        return true;
    };

    double d = 0.0;
    int i64[6];

    parse_ints("grid.cells", 3, cfg.cells.data());
    parse_doubles("grid.spacing", 3, cfg.spacing.data());
    parse_doubles("grid.origin", 3, cfg.origin.data());

    if (parse_ints("partition.omega0", 6, i64)) std::copy(i64, i64 + 6, cfg.omega0.begin());
    if (parse_ints("partition.omega1", 6, i64)) std::copy(i64, i64 + 6, cfg.omega1.begin());
    parse_string("partition.raster", &cfg.raster_file);

    parse_doubles("material.elastic.rho", 1, &cfg.rho);
    parse_doubles("material.elastic.lambda", 1, &cfg.lame_lambda);
    parse_doubles("material.elastic.mu", 1, &cfg.lame_mu);

    std::string em_type;
    if (parse_string("material.em.type", &em_type)) {
        if (em_type == "isotropic") cfg.em_type = EmMaterialType::Isotropic;
        else if (em_type == "bianisotropic") cfg.em_type = EmMaterialType::Bianisotropic;
        else if (em_type == "chiral") cfg.em_type = EmMaterialType::Chiral;
        else if (em_type == "omega") cfg.em_type = EmMaterialType::Omega;
        else throw ConfigError("config key 'material.em.type': unknown type '" + em_type + "'");
    }
    parse_doubles("material.em.epsilon", 1, &cfg.epsilon);
    parse_doubles("material.em.mu", 1, &cfg.mu);
    parse_doubles("material.em.sigma", 1, &cfg.sigma);
    parse_doubles("material.em.kappa", 1, &cfg.kappa);
    parse_doubles("material.em.chi", 1, &cfg.chi);
    parse_doubles("material.em.chi_axis", 3, cfg.chi_axis.data());

    parse_doubles("time.dt", 1, &cfg.dt);
    if (parse_doubles("time.steps", 1, &d)) cfg.steps = static_cast<std::int64_t>(d);
    parse_string("time.scheme", &cfg.scheme);
    if (cfg.scheme != "crank_nicolson" && cfg.scheme != "implicit_euler")
        throw ConfigError("config key 'time.scheme': unknown scheme '" + cfg.scheme + "'");

    if (parse_doubles("forcing.component", 1, &d)) cfg.component = static_cast<int>(d);
    parse_doubles("forcing.amplitude", 1, &cfg.amplitude);
    parse_doubles("forcing.center", 3, cfg.center.data());
    parse_doubles("forcing.width", 1, &cfg.width);
    parse_doubles("forcing.onset", 1, &cfg.onset);
    parse_doubles("forcing.duration", 1, &cfg.duration);
    std::string support;
    if (parse_string("forcing.support", &support)) {
        if (support == "elastic") cfg.support = ForcingSupport::Elastic;
        else if (support == "em") cfg.support = ForcingSupport::Em;
        else if (support == "all") cfg.support = ForcingSupport::All;
        else throw ConfigError("config key 'forcing.support': unknown value '" + support + "'");
    }

    parse_string("output.directory", &cfg.out_directory);
    if (parse_doubles("output.cadence", 1, &d)) cfg.cadence = static_cast<std::int64_t>(d);
    std::string vtk;
    if (parse_string("output.vtk", &vtk)) {
        if (vtk == "true") cfg.vtk = true;
        else if (vtk == "false") cfg.vtk = false;
        else throw ConfigError("config key 'output.vtk': expected true or false");
    }

    parse_doubles("nu", 1, &cfg.nu);

    for (const auto &[key, value] : kv)
        if (!consumed[key])
            throw ConfigError("config key '" + key + "' (line " + std::to_string(value.line) + ") is not recognized");

    if (cfg.component < 0 || cfg.component > 2)
        throw ConfigError("config key 'forcing.component': must be 0, 1 or 2");
    if (!(cfg.dt > 0.0)) throw ConfigError("config key 'time.dt': must be positive");
    if (cfg.steps < 1) throw ConfigError("config key 'time.steps': must be at least 1");
    if (cfg.cadence < 1) throw ConfigError("config key 'output.cadence': must be at least 1");
    if (!(cfg.nu > 0.0)) throw ConfigError("config key 'nu': must be positive");
    return cfg;
}

inline ScenarioConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace detail {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string serialize_config(const ScenarioConfig &c) {
    using detail::fmt_g;
    std::ostringstream o;
    o << "nu = " << fmt_g(c.nu) << "\n\n";
    o << "[grid]\n";
    o << "cells = " << c.cells[0] << " " << c.cells[1] << " " << c.cells[2] << "\n";
    o << "spacing = " << fmt_g(c.spacing[0]) << " " << fmt_g(c.spacing[1]) << " " << fmt_g(c.spacing[2]) << "\n";
    o << "origin = " << fmt_g(c.origin[0]) << " " << fmt_g(c.origin[1]) << " " << fmt_g(c.origin[2]) << "\n\n";
    o << "[partition]\n";
    o << "omega0 = " << c.omega0[0] << " " << c.omega0[1] << " " << c.omega0[2] << " " << c.omega0[3] << " "
      << c.omega0[4] << " " << c.omega0[5] << "\n";
    o << "omega1 = " << c.omega1[0] << " " << c.omega1[1] << " " << c.omega1[2] << " " << c.omega1[3] << " "
      << c.omega1[4] << " " << c.omega1[5] << "\n";
    if (!c.raster_file.empty()) o << "raster = " << c.raster_file << "\n";
    o << "\n[material.elastic]\n";
    o << "rho = " << fmt_g(c.rho) << "\n";
    o << "lambda = " << fmt_g(c.lame_lambda) << "\n";
    o << "mu = " << fmt_g(c.lame_mu) << "\n";
    o << "\n[material.em]\n";
    o << "type = " << detail::em_type_name(c.em_type) << "\n";
    o << "epsilon = " << fmt_g(c.epsilon) << "\n";
    o << "mu = " << fmt_g(c.mu) << "\n";
    o << "sigma = " << fmt_g(c.sigma) << "\n";
    o << "kappa = " << fmt_g(c.kappa) << "\n";
    o << "chi = " << fmt_g(c.chi) << "\n";
    o << "chi_axis = " << fmt_g(c.chi_axis[0]) << " " << fmt_g(c.chi_axis[1]) << " " << fmt_g(c.chi_axis[2]) << "\n";
    o << "\n[time]\n";
    o << "dt = " << fmt_g(c.dt) << "\n";
    o << "steps = " << c.steps << "\n";
    o << "scheme = " << c.scheme << "\n";
    o << "\n[forcing]\n";
    o << "component = " << c.component << "\n";
    o << "amplitude = " << fmt_g(c.amplitude) << "\n";
    o << "center = " << fmt_g(c.center[0]) << " " << fmt_g(c.center[1]) << " " << fmt_g(c.center[2]) << "\n";
    o << "width = " << fmt_g(c.width) << "\n";
    o << "onset = " << fmt_g(c.onset) << "\n";
    o << "duration = " << fmt_g(c.duration) << "\n";
    o << "support = " << detail::support_name(c.support) << "\n";
    o << "\n[output]\n";
    o << "directory = " << c.out_directory << "\n";
    o << "cadence = " << c.cadence << "\n";
    o << "vtk = " << (c.vtk ? "true" : "false") << "\n";
    return o.str();
}

inline bool operator==(const ScenarioConfig &a, const ScenarioConfig &b) {
    return a.cells == b.cells && a.spacing == b.spacing && a.origin == b.origin && a.omega0 == b.omega0 &&
           a.omega1 == b.omega1 && a.raster_file == b.raster_file && a.rho == b.rho &&
           a.lame_lambda == b.lame_lambda && a.lame_mu == b.lame_mu && a.em_type == b.em_type &&
           a.epsilon == b.epsilon && a.mu == b.mu && a.sigma == b.sigma && a.kappa == b.kappa &&
           a.chi == b.chi && a.chi_axis == b.chi_axis && a.dt == b.dt && a.steps == b.steps &&
           a.scheme == b.scheme && a.component == b.component && a.amplitude == b.amplitude &&
           a.center == b.center && a.width == b.width && a.onset == b.onset && a.duration == b.duration &&
           a.support == b.support && a.out_directory == b.out_directory && a.cadence == b.cadence &&
           a.vtk == b.vtk && a.nu == b.nu;
}

} // namespace evosim
