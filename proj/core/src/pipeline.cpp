#include "splitdyn/pipeline.hpp"
#include "splitdyn/errors.hpp"
#include "splitdyn/green.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace splitdyn {

std::string format_double(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

// minimal JSON writer so the artifact floats are exactly %.17g and the
// byte stream is fully under our control
class JsonWriter {
public:
    JsonWriter() : out_("{"), depth_(1), need_comma_(false) {}

    static std::string number(double v) {
        if (std::isnan(v)) return "null";
        if (std::isinf(v)) return v > 0 ? "1e999" : "-1e999";
        return format_double(v);
    }

    void raw(const std::string& key, const std::string& value) {
        line();
        out_ += '"' + key + "\": " + value;
        need_comma_ = true;
    }
    void field(const std::string& key, double v) { raw(key, number(v)); }
    void field(const std::string& key, const std::string& v) { raw(key, '"' + v + '"'); }
    void field(const std::string& key, bool v) { raw(key, v ? "true" : "false"); }
    void field(const std::string& key, long v) { raw(key, std::to_string(v)); }

    void open_object(const std::string& key) {
        raw(key, "{");
        ++depth_;
        need_comma_ = false;
    }
    void close_object() {
        --depth_;
        out_ += '\n';
        out_.append(2 * static_cast<std::size_t>(depth_), ' ');
        out_ += '}';
        need_comma_ = true;
    }

    std::string finish() {
        out_ += "\n}\n";
        return out_;
    }

private:
    void line() {
        if (need_comma_) out_ += ',';
        out_ += '\n';
        out_.append(2 * static_cast<std::size_t>(depth_), ' ');
    }

    std::string out_;
    int depth_;
    bool need_comma_;
};

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw numeric_error("cannot write artifact: " + p.string());
    out << text;
}

std::string series_csv(const TimeSeries& ts) {
    std::string out = "t,sigma,ell,energy,dissipation,m_minus,m_zero,m_plus,"
                      "x_minus_char,x_plus_char,ridge_pos,ridge_density\n";
    for (const auto& s : ts.snapshots) {
        const double cols[12] = {s.t,       s.sigma,      s.ell,
                                 s.energy,  s.dissipation, s.m_minus,
                                 s.m_zero,  s.m_plus,      s.x_minus_char,
                                 s.x_plus_char, s.ridge_pos, s.ridge_density};
        for (int c = 0; c < 12; ++c) {
            out += format_double(cols[c]);
            out += (c == 11) ? '\n' : ',';
        }
    }
    return out;
}

const char* case_name(LimitCase c) {
    switch (c) {
    case LimitCase::above: return "case 1 (force at or above the upper spinodal value)";
    case LimitCase::confined: return "case 2 (confined)";
    case LimitCase::straddles: return "case 3 (force straddles the upper spinodal value)";
    case LimitCase::touches: return "case 4 (force touches the upper spinodal value)";
    }
    return "?";
}

const char* verdict_name(DecayVerdict v) {
    switch (v) {
    case DecayVerdict::pass: return "PASS";
    case DecayVerdict::fail: return "FAIL";
    case DecayVerdict::decayed_below_floor: return "decayed below floor";
    case DecayVerdict::not_confined: return "hypothesis violated: sigma not confined";
    }
    return "?";
}

std::string potential_json(const RunConfig& cfg, const PotentialModel& model,
                           const SpinodalChart& chart, const WellPreparedData& data,
                           const GreenFunction& green, double kernel_check,
                           const BranchExpansion* expansion,
                           const std::string& degenerate_note) {
    JsonWriter w;
    w.field("potential", cfg.potential);
    w.open_object("params");
    for (const auto& [k, v] : model.params) w.field(k, v);
    w.close_object();
    w.open_object("chart");
    w.field("x_star_minus", chart.x_star_minus);
    w.field("x_star_plus", chart.x_star_plus);
    w.field("x_2star_minus", chart.x_2star_minus);
    w.field("x_2star_plus", chart.x_2star_plus);
    w.field("sigma_star_minus", chart.sigma_star_minus);
    w.field("sigma_star_plus", chart.sigma_star_plus);
    w.close_object();
    w.open_object("data");
    w.field("m", data.m);
    w.field("x0", data.x0);
    w.field("x_plus", data.x_plus);
    w.field("x_minus", data.x_minus);
    w.field("sigma0", data.sigma0);
    w.field("a", data.a);
    w.field("b", data.b);
    w.field("ell_star", data.ell_star);
    w.close_object();
    w.open_object("expansion");
    if (expansion) {
        w.field("c", expansion->c);
        w.field("a1_zero", expansion->a1_zero);
        w.field("a1_minus", expansion->a1_minus);
        w.field("a2", expansion->a2);
        w.field("b_lin", expansion->b_lin);
        w.field("taylor_c1", expansion->taylor_c1);
        w.field("taylor_c2", expansion->taylor_c2);
    } else {
        w.field("degenerate", degenerate_note);
    }
    w.close_object();
    w.open_object("green");
    w.field("theta2", green.theta2);
    w.field("res_c1", green.res_c1);
    w.field("res_c2", green.res_c2);
    w.field("c1_anomaly", green.c1_anomaly);
    w.field("kernel_check_sup_error", kernel_check);
    w.close_object();
    return w.finish();
}

std::string launch_json(const FixpointState& fix, const LaunchProfile& prof) {
    JsonWriter w;
    w.field("iterations", static_cast<long>(fix.iterations));
    {
        std::string arr = "[";
        for (std::size_t i = 0; i < fix.diffs.size(); ++i) {
            arr += JsonWriter::number(fix.diffs[i]);
            if (i + 1 < fix.diffs.size()) arr += ", ";
        }
        arr += "]";
        w.raw("diffs", arr);
    }
    w.field("contraction_ratio", fix.ratio);
    w.field("residual", fix.residual);
    w.field("phi_norm", fix.phi_norm);
    w.field("phi_class_ok", fix.phi_class_ok);
    w.field("w_bound_constant", fix.w_bound_constant);
    w.field("w_fitted_rate", fix.w_fitted_rate);
    w.open_object("seed");
    w.field("clamped_nodes", static_cast<long>(prof.clamped_nodes));
    w.field("y0_class_ok", prof.y0_class_ok);
    w.field("yplus_class_ok", prof.yplus_class_ok);
    w.close_object();
    w.open_object("grid");
    w.field("t_left", fix.grid.t_left);
    w.field("t0", fix.grid.t0);
    w.field("dt", fix.grid.dt);
    w.field("n", static_cast<long>(fix.grid.n));
    w.field("delta", fix.grid.delta);
    w.field("theta2", fix.grid.theta2);
    w.field("span_capped", fix.grid.span_capped);
    w.close_object();
    w.open_object("phi");
    w.field("t_left", fix.phi.t_left);
    w.field("dt", fix.phi.dt);
    w.field("tail_coef", fix.phi.tail.coef);
    w.field("tail_rate", fix.phi.tail.rate);
    const std::size_t max_samples = 2000;
    const std::size_t stride =
        fix.phi.size() > max_samples
            ? (fix.phi.size() + max_samples - 1) / max_samples
            : 1;
    w.field("stride", static_cast<long>(stride));
    {
        std::string arr = "[";
        bool first = true;
        for (std::size_t i = 0; i < fix.phi.size(); i += stride) {
            if (!first) arr += ", ";
            arr += JsonWriter::number(fix.phi.values[i]);
            first = false;
        }
        if (fix.phi.size() > 0 && (fix.phi.size() - 1) % stride != 0)
            arr += ", " + JsonWriter::number(fix.phi.values.back());
        arr += "]";
        w.raw("values", arr);
    }
    w.close_object();
    return w.finish();
}

std::string report_json(const EquilibriumReport& r) {
    JsonWriter w;
    w.field("converged", r.converged);
    w.field("t_stop", r.t_stop);
    w.field("sigma_inf", r.sigma_inf);
    w.field("x_minus", r.x_minus);
    w.field("x_zero", r.x_zero);
    w.field("x_plus", r.x_plus);
    w.field("boundary_caveat", r.boundary_caveat);
    if (r.boundary_caveat) {
        w.field("m_plus", r.m_plus);
        w.field("m_minus_plus_zero", r.m_minus_plus_zero);
    } else {
        w.field("m_minus", r.m_minus);
        w.field("m_zero", r.m_zero);
        w.field("m_plus", r.m_plus);
    }
    w.field("m_tilde", r.m_tilde);
    w.field("constraint_residual", r.constraint_residual);
    w.field("slope_residual", r.slope_residual);
    w.field("dissipation_at_stop", r.dissipation_at_stop);
    w.field("integral_D", r.integral_D);
    w.field("energy_drop", r.energy_drop);
    w.open_object("decay");
    w.field("verdict", std::string(verdict_name(r.decay.verdict)));
    w.field("epsilon_hat", r.decay.epsilon_hat);
    w.field("threshold", r.decay.threshold);
    w.field("window_lo", r.decay.window_lo);
    w.field("window_hi", r.decay.window_hi);
    w.field("points", static_cast<long>(r.decay.points));
    w.close_object();
    w.open_object("uniqueness");
    w.field("agree", r.uniqueness.agree);
    w.field("sigma_even", r.uniqueness.sigma_even);
    w.field("sigma_odd", r.uniqueness.sigma_odd);
    w.field("mass_diff", r.uniqueness.mass_diff);
    w.field("scenario", std::string(case_name(r.uniqueness.scenario)));
    w.field("sign_quantity", r.uniqueness.sign_quantity);
    w.field("h4_hypothesis_met", r.uniqueness.h4_hypothesis_met);
    w.field("ell_outside_spinodal", r.uniqueness.ell_outside_spinodal);
    w.field("note", r.uniqueness.note);
    w.close_object();
    return w.finish();
}

} // namespace

std::string render_equilibrium_json(const EquilibriumReport& report) {
    return report_json(report);
}

PipelineResult run_pipeline(const RunConfig& cfg, bool check_only) {
    PipelineResult res;
    namespace fs = std::filesystem;
    try {
        const PotentialModel model = make_potential(cfg.potential, cfg.potential_params);
        const auto violations = validate(model);
        if (!violations.empty()) {
            res.status = PipelineStatus::numeric;
            res.message = "potential rejected: " + violations.front();
            return res;
        }
        res.chart = spinodal_chart(model);

        const Anchor anchor = cfg.sigma0 ? Anchor::sigma0(*cfg.sigma0)
                                         : Anchor::ell_star(*cfg.ell_star);
        res.data = prepare(model, res.chart, cfg.m, anchor);

        fs::create_directories(cfg.out_dir);
        const fs::path out(cfg.out_dir);

        {
            const GreenFunction green =
                build_green(ConvolutionKernels(res.data.a, res.data.b, res.data.m));
            const double kernel_check = verify_green(green);
            const BranchExpansion* exp_ptr = nullptr;
            BranchExpansion expansion;
            std::string degenerate_note;
            try {
                expansion = branch_expansion(model, res.chart);
                exp_ptr = &expansion;
            } catch (const numeric_error& e) {
                degenerate_note = e.what();
            }
            write_text(out / "potential.json",
                       potential_json(cfg, model, res.chart, res.data, green,
                                      kernel_check, exp_ptr, degenerate_note));
        }
        if (check_only) {
            res.message = "check complete";
            return res;
        }

        AsymptoticParams params;
        params.t0 = cfg.t0;
        params.delta = cfg.delta;
        params.class_bound_M = cfg.class_bound_M;
        params.dt = cfg.launch_dt;
        params.node_count = cfg.nodes;
        params.phi_tol = cfg.tol_fixpoint;

        const FixpointState fix = solve_phi(model, res.data, params);
        const SeedResult seed = seed_ensemble(model, res.data, params, fix.phi);
        write_text(out / "launch.json", launch_json(fix, seed.profile));
        const TimeSeries series =
            run(seed.ensemble, model, res.chart, cfg.t_end, cfg.dt, cfg.cadence);
        write_text(out / "series.csv", series_csv(series));

        const EquilibriumReport report =
            make_report(series, model, res.chart, cfg.m, res.data.ell_star,
                        cfg.tol_equilibrium_d, cfg.equilibrium_window, cfg.decay_eta);
        res.report = report;
        res.have_report = true;
        write_text(out / "equilibrium.json", report_json(report));
        res.message = "ok";
        return res;
    } catch (const stability_error& e) {
        res.status = PipelineStatus::stability;
        res.message = e.what();
    } catch (const contraction_error& e) {
        res.status = PipelineStatus::contraction;
        res.message = e.what();
    } catch (const ordering_error& e) {
        res.status = PipelineStatus::ordering;
        res.message = e.what();
    } catch (const convergence_error& e) {
        res.status = PipelineStatus::not_converged;
        res.message = e.what();
    } catch (const config_error& e) {
        res.status = PipelineStatus::config;
        res.message = e.what();
    } catch (const error& e) {
        res.status = PipelineStatus::numeric;
        res.message = e.what();
    }
    return res;
}

} // namespace splitdyn
