#pragma once

#include <map>
#include <optional>
#include <string>

namespace splitdyn {

/// One flat key = value document per run. Unknown keys are rejected;
/// either sigma0 or ell_star anchors the launch data.
struct RunConfig {
    std::string potential = "reference";
    std::map<std::string, double> potential_params; // alpha, beta, gamma, ...
    double m = 0.0;                                 // required
    std::optional<double> sigma0;
    std::optional<double> ell_star;

    double t0 = -10.0;
    double t_end = 60.0;
    double dt = 1e-3;
    double launch_dt = 1e-2;
    int nodes = 129;
    int cadence = 10;

    double delta = 0.0;   // <= 0: min(|a|, b)/4
    double class_bound_M = 10.0;

    double tol_fixpoint = 1e-10;
    double tol_equilibrium_d = 1e-8;
    double equilibrium_window = 5.0;
    double decay_eta = 0.02;

    std::string out_dir = ".";
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

} // namespace splitdyn
