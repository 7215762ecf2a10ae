#pragma once

#include "splitdyn/config.hpp"
#include "splitdyn/longtime.hpp"
#include "splitdyn/transport.hpp"
#include "splitdyn/wellposed.hpp"

#include <string>

namespace splitdyn {

/// Exit statuses of the full pipeline; the CLI forwards them as process exit
/// codes.
enum class PipelineStatus : int {
    ok = 0,
    config = 1,
    stability = 2,
    contraction = 3,
    ordering = 4,
    not_converged = 5,
    numeric = 6,
};

struct PipelineResult {
    PipelineStatus status = PipelineStatus::ok;
    std::string message;
    // populated up to the stage reached
    WellPreparedData data{};
    SpinodalChart chart{};
    bool have_report = false;
    EquilibriumReport report{};
};

/// prepare -> solve_phi -> seed_ensemble -> run -> report, writing
/// series.csv, launch.json, potential.json and equilibrium.json into
/// cfg.out_dir. Artifacts are byte-identical across runs of the same
/// configuration. check_only stops after validation, the spinodal chart and
/// the kernel-inversion check.
PipelineResult run_pipeline(const RunConfig& cfg, bool check_only = false);

/// Serialization helper shared by all artifact writers: shortest-faithful
/// 17-significant-digit decimal.
std::string format_double(double v);

/// Renders the equilibrium report exactly as the pipeline writes it.
std::string render_equilibrium_json(const EquilibriumReport& report);

} // namespace splitdyn
