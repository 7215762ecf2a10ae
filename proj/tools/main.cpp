#include "splitdyn/errors.hpp"
#include "splitdyn/green.hpp"
#include "splitdyn/longtime.hpp"
#include "splitdyn/pipeline.hpp"
#include "splitdyn/transport.hpp"
#include "splitdyn/wellposed.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <vector>

namespace {

using namespace splitdyn;

int status_code(PipelineStatus s) { return static_cast<int>(s); }

RunConfig load_or_die(const std::string& path, const std::string& out_override) {
    RunConfig cfg = load_config_file(path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    return cfg;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 bool check_only) {
    RunConfig cfg;
    try {
        cfg = load_or_die(config_path, out_dir);
    } catch (const error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return status_code(PipelineStatus::config);
    }
    const PipelineResult res = run_pipeline(cfg, check_only);
    if (res.status != PipelineStatus::ok) {
        std::cerr << "error: " << res.message << "\n";
        return status_code(res.status);
    }
    if (res.have_report) {
        const auto& r = res.report;
        std::cout << "equilibrium at t_stop=" << format_double(r.t_stop)
                  << "  sigma_inf=" << format_double(r.sigma_inf) << "\n"
                  << "  masses: m-=" << format_double(r.m_minus)
                  << " m0=" << format_double(r.m_zero)
                  << " m+=" << format_double(r.m_plus)
                  << "  (m_tilde=" << format_double(r.m_tilde) << ")\n"
                  << "  constraint residual " << format_double(r.constraint_residual)
                  << ", slope residual " << format_double(r.slope_residual) << "\n";
    } else {
        std::cout << res.message << "\n";
    }
    return 0;
}

int cmd_green_check(const std::string& config_path) {
    RunConfig cfg;
    try {
        cfg = load_config_file(config_path);
        const PotentialModel model = make_potential(cfg.potential, cfg.potential_params);
        const SpinodalChart chart = spinodal_chart(model);
        const Anchor anchor = cfg.sigma0 ? Anchor::sigma0(*cfg.sigma0)
                                         : Anchor::ell_star(*cfg.ell_star);
        const WellPreparedData data = prepare(model, chart, cfg.m, anchor);
        const GreenFunction g =
            build_green(ConvolutionKernels(data.a, data.b, data.m));
        const double err = verify_green(g);
        std::cout << "{\n"
                  << "  \"theta2\": " << format_double(g.theta2) << ",\n"
                  << "  \"res_c1\": " << format_double(g.res_c1) << ",\n"
                  << "  \"res_c2\": " << format_double(g.res_c2) << ",\n"
                  << "  \"c1_anomaly\": " << (g.c1_anomaly ? "true" : "false") << ",\n"
                  << "  \"kernel_check_sup_error\": " << format_double(err) << "\n"
                  << "}\n";
        return err <= 1e-8 ? 0 : status_code(PipelineStatus::numeric);
    } catch (const stability_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::stability);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::config);
    }
}

int cmd_fixpoint(const std::string& config_path, const std::string& out_dir) {
    try {
        RunConfig cfg = load_or_die(config_path, out_dir);
        const PotentialModel model = make_potential(cfg.potential, cfg.potential_params);
        const SpinodalChart chart = spinodal_chart(model);
        const Anchor anchor = cfg.sigma0 ? Anchor::sigma0(*cfg.sigma0)
                                         : Anchor::ell_star(*cfg.ell_star);
        const WellPreparedData data = prepare(model, chart, cfg.m, anchor);
        AsymptoticParams params;
        params.t0 = cfg.t0;
        params.delta = cfg.delta;
        params.class_bound_M = cfg.class_bound_M;
        params.dt = cfg.launch_dt;
        params.node_count = cfg.nodes;
        params.phi_tol = cfg.tol_fixpoint;
        const FixpointState fix = solve_phi(model, data, params);

        std::cout << "# iteration,diff\n";
        for (std::size_t i = 0; i < fix.diffs.size(); ++i)
            std::cout << (i + 1) << "," << format_double(fix.diffs[i]) << "\n";
        std::cout << "# contraction_ratio," << format_double(fix.ratio) << "\n"
                  << "# residual," << format_double(fix.residual) << "\n";

        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream csv(std::filesystem::path(cfg.out_dir) / "phi.csv",
                          std::ios::binary);
        csv << "t,phi\n";
        for (std::size_t i = 0; i < fix.phi.size(); ++i)
            csv << format_double(fix.phi.t_at(i)) << ","
                << format_double(fix.phi.values[i]) << "\n";
        return 0;
    } catch (const stability_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::stability);
    } catch (const contraction_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::contraction);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::config);
    }
}

// reads an existing series.csv and rebuilds the equilibrium report
int cmd_report(const std::string& config_path, const std::string& out_dir) {
    try {
        RunConfig cfg = load_or_die(config_path, out_dir);
        const PotentialModel model = make_potential(cfg.potential, cfg.potential_params);
        const SpinodalChart chart = spinodal_chart(model);
        const Anchor anchor = cfg.sigma0 ? Anchor::sigma0(*cfg.sigma0)
                                         : Anchor::ell_star(*cfg.ell_star);
        const WellPreparedData data = prepare(model, chart, cfg.m, anchor);

        const auto path = std::filesystem::path(cfg.out_dir) / "series.csv";
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot open " << path.string() << "\n";
            return status_code(PipelineStatus::config);
        }
        TimeSeries series;
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            StateSnapshot s;
            double* cols[12] = {&s.t,       &s.sigma,      &s.ell,
                                &s.energy,  &s.dissipation, &s.m_minus,
                                &s.m_zero,  &s.m_plus,      &s.x_minus_char,
                                &s.x_plus_char, &s.ridge_pos, &s.ridge_density};
            std::stringstream ss(line);
            std::string cell;
            for (int c = 0; c < 12 && std::getline(ss, cell, ','); ++c)
                *cols[c] = cell == "nan" ? std::nan("") : std::stod(cell);
            series.snapshots.push_back(s);
        }
        const EquilibriumReport rep =
            make_report(series, model, chart, data.m, data.ell_star,
                        cfg.tol_equilibrium_d, cfg.equilibrium_window, cfg.decay_eta);
        {
            std::ofstream out(std::filesystem::path(cfg.out_dir) / "equilibrium.json",
                              std::ios::binary);
            out << render_equilibrium_json(rep);
        }
        std::cout << "sigma_inf=" << format_double(rep.sigma_inf)
                  << " t_stop=" << format_double(rep.t_stop) << "\n"
                  << "triple: " << format_double(rep.x_minus) << " "
                  << format_double(rep.x_zero) << " " << format_double(rep.x_plus)
                  << "\n"
                  << "masses: " << format_double(rep.m_minus) << " "
                  << format_double(rep.m_zero) << " " << format_double(rep.m_plus)
                  << " (m_tilde=" << format_double(rep.m_tilde) << ")\n"
                  << "constraint residual " << format_double(rep.constraint_residual)
                  << "\n"
                  << "decay: epsilon_hat=" << format_double(rep.decay.epsilon_hat)
                  << " threshold=" << format_double(rep.decay.threshold) << "\n"
                  << "uniqueness: " << (rep.uniqueness.agree ? "agree" : "DISAGREE")
                  << ", " << (rep.uniqueness.note.empty() ? "ok" : rep.uniqueness.note)
                  << "\n";
        return 0;
    } catch (const convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::not_converged);
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return status_code(PipelineStatus::config);
    }
}

int cmd_sweep(const std::vector<std::string>& configs) {
    // independent runs in parallel child processes with disjoint output dirs
    std::vector<pid_t> kids;
    const unsigned max_parallel = std::max(1u, std::thread::hardware_concurrency());
    int failures = 0;
    std::size_t next = 0;
    auto reap_one = [&]() {
        int status = 0;
        const pid_t pid = wait(&status);
        if (pid > 0 && (!WIFEXITED(status) || WEXITSTATUS(status) != 0)) ++failures;
    };
    std::size_t active = 0;
    while (next < configs.size()) {
        if (active >= max_parallel) {
            reap_one();
            --active;
        }
        const std::string& cfg = configs[next++];
        const pid_t pid = fork();
        if (pid == 0) {
            _exit(cmd_simulate(cfg, "", false));
        }
        ++active;
    }
    while (active-- > 0) reap_one();
    if (failures > 0) {
        std::cerr << failures << " sweep run(s) failed\n";
        return status_code(PipelineStatus::numeric);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mass-splitting transport dynamics"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool check_flag = false;
    std::vector<std::string> sweep_configs;

    auto add_common = [&](CLI::App* sub, bool need_config = true) {
        auto* opt = sub->add_option("--config", config_path, "run configuration file");
        if (need_config) opt->required();
        sub->add_option("--out", out_dir, "output directory override");
    };

    auto* check = app.add_subcommand(
        "check", "validate the potential, the spinodal chart and the kernel inversion");
    add_common(check);

    auto* fix = app.add_subcommand(
        "fixpoint", "solve the launch fixed point; prints per-iteration norms");
    add_common(fix);

    auto* sim = app.add_subcommand("simulate", "full pipeline run");
    add_common(sim);
    sim->add_flag("--check", check_flag,
                  "stop after validation, chart and kernel checks");

    auto* rep = app.add_subcommand("report", "post-process an existing series.csv");
    add_common(rep);

    auto* gc = app.add_subcommand("green-check",
                                  "print the kernel-inversion constants as JSON");
    add_common(gc);

    auto* sweep = app.add_subcommand("sweep", "run several configs in parallel");
    sweep->add_option("configs", sweep_configs, "configuration files")->required();

    CLI11_PARSE(app, argc, argv);

    if (check->parsed()) return cmd_simulate(config_path, out_dir, true);
    if (fix->parsed()) return cmd_fixpoint(config_path, out_dir);
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, check_flag);
    if (rep->parsed()) return cmd_report(config_path, out_dir);
    if (gc->parsed()) return cmd_green_check(config_path);
    if (sweep->parsed()) return cmd_sweep(sweep_configs);
    return 1;
}
