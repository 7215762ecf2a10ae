#include "splitdyn/config.hpp"
#include "splitdyn/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace splitdyn {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_number(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("invalid value for '" + key + "': " + v);
    }
}

long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw config_error("invalid value for '" + key + "': " + v);
    }
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    bool have_m = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) +
                               ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw config_error("line " + std::to_string(lineno) +
                               ": expected 'key = value'");

        if (key == "potential") {
            cfg.potential = val;
        } else if (key == "alpha" || key == "beta" || key == "gamma") {
            cfg.potential_params[key] = parse_number(key, val);
        } else if (key == "m") {
            cfg.m = parse_number(key, val);
            have_m = true;
        } else if (key == "sigma0") {
            cfg.sigma0 = parse_number(key, val);
        } else if (key == "ell_star") {
            cfg.ell_star = parse_number(key, val);
        } else if (key == "t0") {
            cfg.t0 = parse_number(key, val);
        } else if (key == "t_end") {
            cfg.t_end = parse_number(key, val);
        } else if (key == "dt") {
            cfg.dt = parse_number(key, val);
        } else if (key == "launch_dt") {
            cfg.launch_dt = parse_number(key, val);
        } else if (key == "nodes") {
            cfg.nodes = static_cast<int>(parse_int(key, val));
        } else if (key == "cadence") {
            cfg.cadence = static_cast<int>(parse_int(key, val));
        } else if (key == "delta") {
            cfg.delta = parse_number(key, val);
        } else if (key == "M") {
            cfg.class_bound_M = parse_number(key, val);
        } else if (key == "tol_fixpoint") {
            cfg.tol_fixpoint = parse_number(key, val);
        } else if (key == "tol_equilibrium_d") {
            cfg.tol_equilibrium_d = parse_number(key, val);
        } else if (key == "equilibrium_window") {
            cfg.equilibrium_window = parse_number(key, val);
        } else if (key == "decay_eta") {
            cfg.decay_eta = parse_number(key, val);
        } else if (key == "out") {
            cfg.out_dir = val;
        } else {
            throw config_error("unknown key '" + key + "'");
        }
    }

    if (!have_m) throw config_error("missing required field 'm'");
    if (!(cfg.m > 0.0) || cfg.m > 1.0) throw config_error("m must be in (0,1]");
    if (cfg.sigma0 && cfg.ell_star)
        throw config_error("give either sigma0 or ell_star, not both");
    if (!cfg.sigma0 && !cfg.ell_star)
        throw config_error("missing anchor: give sigma0 or ell_star");
    if (cfg.nodes < 33 || cfg.nodes % 2 == 0)
        throw config_error("node count must be odd >= 33");
    if (!(cfg.t0 < 0.0)) throw config_error("t0 must be negative");
    if (!(cfg.t_end > 0.0)) throw config_error("t_end must be positive");
    if (!(cfg.dt > 0.0) || !(cfg.launch_dt > 0.0))
        throw config_error("time steps must be positive");
    if (cfg.cadence < 1) throw config_error("cadence must be >= 1");
    for (double tol : {cfg.tol_fixpoint, cfg.tol_equilibrium_d,
                       cfg.equilibrium_window, cfg.decay_eta})
        if (!(tol > 0.0)) throw config_error("tolerances must be positive");
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace splitdyn
