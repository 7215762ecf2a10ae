#include "splitdyn/wellposed.hpp"
#include "splitdyn/errors.hpp"
#include "splitdyn/green.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace splitdyn {

double q_cdf(double y) { return 0.5 * (1.0 + std::erf(y)); }

namespace {

double resolve_delta(const WellPreparedData& data, const AsymptoticParams& p) {
    if (p.delta > 0.0) return p.delta;
    return std::min(std::abs(data.a), data.b) / 4.0;
}

// tail of c_f * f + c_g * g: keep the slowest-decaying rate
ExponentialTail combine_tails(const ExponentialTail& f, const ExponentialTail& g,
                              double cf, double cg) {
    const double af = cf * f.coef, ag = cg * g.coef;
    if (af == 0.0 && ag == 0.0) return {0.0, std::max(f.rate, g.rate)};
    if (af == 0.0) return {ag, g.rate};
    if (ag == 0.0) return {af, f.rate};
    if (std::abs(f.rate - g.rate) < 1e-12) return {af + ag, f.rate};
    return f.rate < g.rate ? ExponentialTail{af, f.rate} : ExponentialTail{ag, g.rate};
}

SampledFunction lin_comb(const SampledFunction& f, const SampledFunction& g,
                         double cf, double cg) {
    SampledFunction out = SampledFunction::zeros_like(f);
    for (std::size_t i = 0; i < f.size(); ++i)
        out.values[i] = cf * f.values[i] + cg * g.values[i];
    out.tail = combine_tails(f.tail, g.tail, cf, cg);
    return out;
}

struct InnerProblem {
    const PotentialModel& model;
    double x_base;
    double k_curv;       // kernel/curvature at the base point
    double disp_k = 0.0; // label of the explicit displacement K e^{-a t}
    double a = 0.0;      // curvature used in the displacement/remainder
};

// Exact Taylor remainder of H' at x_base for total displacement u:
// H'(x_base + u) - H'(x_base) - k u. Direct subtraction cancels
// catastrophically once |u| drops below the resolution of H'(x_base) --
// the leftover -k u noise then dwarfs the true quadratic remainder and the
// growing launch kernel amplifies it across the grid -- so small
// displacements switch to the cubic Taylor form.
SampledFunction remainder_of(const InnerProblem& pr, const SampledFunction& Y,
                             std::span<const double> disp) {
    SampledFunction rho = SampledFunction::zeros_like(Y);
    const double h1b = pr.model.H1(pr.x_base);
    const double h3b = pr.model.H3(pr.x_base);
    const double h4b = pr.model.H4(pr.x_base);
    const double u_switch = 1e-4;
    for (std::size_t i = 0; i < Y.size(); ++i) {
        const double u = disp[i] + Y.values[i];
        if (std::abs(u) < u_switch)
            rho.values[i] = u * u * (0.5 * h3b + h4b * u / 6.0);
        else
            rho.values[i] = pr.model.H1(pr.x_base + u) - h1b - pr.k_curv * u;
    }
    // leading tail: (H'''/2) (leading displacement)^2
    ExponentialTail dlead;
    if (pr.disp_k != 0.0)
        dlead = combine_tails({pr.disp_k, -pr.a}, Y.tail, 1.0, 1.0);
    else
        dlead = Y.tail;
    rho.tail = {0.5 * h3b * dlead.coef * dlead.coef, 2.0 * dlead.rate};
    return rho;
}

CorrectionResult solve_inner(const InnerProblem& pr, const SampledFunction& phi,
                             const AsymptoticParams& params, double delta,
                             const std::vector<double>& disp,
                             const SampledFunction* warm_start) {
    CorrectionResult res;
    res.Y = warm_start ? *warm_start : SampledFunction::zeros_like(phi);
    double prev_diff = -1.0;
    for (int it = 0; it < params.max_inner; ++it) {
        const SampledFunction rho = remainder_of(pr, res.Y, disp);
        const SampledFunction rhs = lin_comb(phi, rho, 1.0, -1.0);
        SampledFunction next = exp_convolve(rhs, pr.k_curv);
        const SampledFunction diff = lin_comb(next, res.Y, 1.0, -1.0);
        const double d = weighted_sup_norm(diff, pr.a - delta);
        res.Y = std::move(next);
        res.iterations = it + 1;
        res.last_diff = d;
        if (prev_diff > 0.0 && d > 0.0) {
            const double q = d / prev_diff;
            if (it == 1) res.ratio = q; // first quotient measures the contraction
            if (q >= 1.0 && d > 1e3 * params.correction_tol)
                throw contraction_error(
                    "t0 not negative enough: characteristic correction not contracting");
        }
        prev_diff = d;
        if (d <= params.correction_tol) break;
    }
    res.class_norm = weighted_sup_norm(res.Y, pr.a - delta);
    return res;
}

std::vector<double> displacement_grid(const SampledFunction& phi, double K, double a) {
    std::vector<double> d(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i)
        d[i] = K * std::exp(-a * phi.t_at(i));
    return d;
}

} // namespace

LaunchGrid make_launch_grid(const WellPreparedData& data,
                            const AsymptoticParams& params) {
    LaunchGrid g;
    g.delta = resolve_delta(data, params);
    if (2.0 * std::abs(data.a) - g.delta <= 0.0)
        throw numeric_error("weight offset delta too large: 2|a| - delta <= 0");
    if (!(params.t0 < 0.0)) throw config_error("t0 must be negative");
    g.theta2 = -((1.0 - data.m) * data.a + data.m * data.b);
    g.t0 = params.t0;
    g.dt = params.dt;
    double span = params.span_factor / std::abs(g.theta2);
    const double rate_cap = std::max({std::abs(data.a), data.b, std::abs(g.theta2),
                                      2.0 * std::abs(data.a) + g.delta});
    if (span * rate_cap > 600.0) {
        span = 600.0 / rate_cap;
        g.span_capped = true;
    }
    const auto steps = static_cast<std::size_t>(std::ceil(span / g.dt));
    g.n = steps + 1;
    g.t_left = g.t0 - static_cast<double>(steps) * g.dt;
    return g;
}

CorrectionResult extremal_fixpoint(const PotentialModel& model,
                                   const WellPreparedData& data,
                                   const SampledFunction& phi, Side side,
                                   const AsymptoticParams& params) {
    const double delta = resolve_delta(data, params);
    const double x_base = side == Side::plus ? data.x_plus : data.x_minus;
    const double k = model.H2(x_base);
    if (!(k > 0.0))
        throw numeric_error("extremal curvature not positive at the launch state");
    InnerProblem pr{model, x_base, k, 0.0, data.a};
    const std::vector<double> disp(phi.size(), 0.0);
    return solve_inner(pr, phi, params, delta, disp, nullptr);
}

CorrectionResult interior_fixpoint(const PotentialModel& model,
                                   const WellPreparedData& data,
                                   const SampledFunction& phi, double K,
                                   const AsymptoticParams& params) {
    const double delta = resolve_delta(data, params);
    InnerProblem pr{model, data.x0, data.a, K, data.a};
    const std::vector<double> disp = displacement_grid(phi, K, data.a);
    return solve_inner(pr, phi, params, delta, disp, nullptr);
}

RemainderSet remainders(const PotentialModel& model, const WellPreparedData& data,
                        const SampledFunction& Y0, const SampledFunction& Yplus,
                        std::span<const SampledFunction> YK,
                        std::span<const double> K) {
    RemainderSet r;
    const std::vector<double> zero(Y0.size(), 0.0);
    r.rho0 = remainder_of({model, data.x0, data.a, 0.0, data.a}, Y0, zero);
    r.rho_plus = remainder_of({model, data.x_plus, data.b, 0.0, data.a}, Yplus, zero);
    r.rho_k.reserve(YK.size());
    for (std::size_t i = 0; i < YK.size(); ++i) {
        const std::vector<double> disp = displacement_grid(YK[i], K[i], data.a);
        r.rho_k.push_back(
            remainder_of({model, data.x0, data.a, K[i], data.a}, YK[i], disp));
    }
    return r;
}

WResult assemble_W(const WellPreparedData& data, const RemainderSet& rem,
                   const KGrid& kgrid, double delta) {
    const std::size_t n = rem.rho0.size();
    const std::size_t nk = kgrid.size();
    const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);

    // rho_bar(t) = ∫ rho(t,K) Q'(K) dK by Gauss-Hermite, pairwise fixed order
    SampledFunction rho_bar = SampledFunction::zeros_like(rem.rho0);
    {
        std::vector<double> terms(nk);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < nk; ++j)
                terms[j] = kgrid.weights[j] * rem.rho_k[j].values[i];
            rho_bar.values[i] = inv_sqrt_pi * paired_sum(terms);
        }
        // tail: same quadrature applied to the per-node tail coefficients
        // (rates agree at 2|a| through the K e^{-a t} displacement)
        std::vector<double> tc(nk);
        double rate = rem.rho_k.empty() ? rem.rho0.tail.rate : rem.rho_k[0].tail.rate;
        for (std::size_t j = 0; j < nk; ++j) {
            tc[j] = kgrid.weights[j] * rem.rho_k[j].tail.coef;
            rate = std::min(rate, rem.rho_k[j].tail.rate);
        }
        rho_bar.tail = {inv_sqrt_pi * paired_sum(tc), rate};
    }

    const SampledFunction u0_rho0 = exp_convolve(rem.rho0, data.a);
    const SampledFunction up_rhop = exp_convolve(rem.rho_plus, data.b);
    const SampledFunction u0_rhobar = exp_convolve(rho_bar, data.a);

    WResult out;
    out.W = SampledFunction::zeros_like(rem.rho0);
    const double m = data.m, a = data.a, b = data.b;
    for (std::size_t i = 0; i < n; ++i) {
        out.W.values[i] =
            m * (rem.rho0.values[i] - a * u0_rho0.values[i]) +
            (1.0 - m) * (rem.rho_plus.values[i] - b * up_rhop.values[i]) +
            m * a * (u0_rho0.values[i] - u0_rhobar.values[i]) +
            m * (rho_bar.values[i] - rem.rho0.values[i]);
    }
    ExponentialTail t1 = combine_tails(rem.rho0.tail, u0_rho0.tail, m, -m * a);
    ExponentialTail t2 = combine_tails(rem.rho_plus.tail, up_rhop.tail, 1.0 - m,
                                       -(1.0 - m) * b);
    ExponentialTail t3 = combine_tails(u0_rho0.tail, u0_rhobar.tail, m * a, -m * a);
    ExponentialTail t4 = combine_tails(rho_bar.tail, rem.rho0.tail, m, -m);
    out.W.tail = combine_tails(combine_tails(t1, t2, 1, 1),
                               combine_tails(t3, t4, 1, 1), 1, 1);

    out.bound_constant = weighted_sup_norm(out.W, -2.0 * (-a + delta));
    double fit = 0.0;
    try {
        SampledFunction absw = out.W;
        fit = log_slope(absw, 1e-280);
    } catch (const numeric_error&) {
        fit = 0.0; // W identically negligible
    }
    out.fitted_rate = fit;
    return out;
}

namespace {

struct SweepProducts {
    CorrectionResult y0;
    CorrectionResult yplus;
    std::vector<SampledFunction> yk;
    WResult w;
};

SweepProducts correction_sweep(const PotentialModel& model,
                               const WellPreparedData& data,
                               const AsymptoticParams& params, double delta,
                               const KGrid& kgrid, const SampledFunction& phi,
                               std::vector<SampledFunction>* warm) {
    SweepProducts s;
    const std::vector<double> zero(phi.size(), 0.0);
    s.y0 = solve_inner({model, data.x0, data.a, 0.0, data.a}, phi, params, delta,
                       zero, nullptr);
    s.yplus = solve_inner({model, data.x_plus, data.b, 0.0, data.a}, phi, params,
                          delta, zero, nullptr);
    const std::size_t nk = kgrid.size();
    s.yk.reserve(nk);
    for (std::size_t j = 0; j < nk; ++j) {
        const std::vector<double> disp =
            displacement_grid(phi, kgrid.nodes[j], data.a);
        const SampledFunction* ws =
            (warm && warm->size() == nk) ? &(*warm)[j] : nullptr;
        s.yk.push_back(solve_inner({model, data.x0, data.a, kgrid.nodes[j], data.a},
                                   phi, params, delta, disp, ws)
                           .Y);
    }
    RemainderSet rem = remainders(model, data, s.y0.Y, s.yplus.Y, s.yk, kgrid.nodes);
    s.w = assemble_W(data, rem, kgrid, delta);
    return s;
}

} // namespace

FixpointState solve_phi(const PotentialModel& model, const WellPreparedData& data,
                        const AsymptoticParams& params) {
    FixpointState st;
    st.grid = make_launch_grid(data, params);
    const double delta = st.grid.delta;
    const KGrid kgrid = gauss_hermite(params.node_count);
    const GreenFunction green =
        build_green(ConvolutionKernels(data.a, data.b, data.m));
    const double k_weight = 2.0 * data.a + delta; // class weight rate

    SampledFunction phi;
    phi.t_left = st.grid.t_left;
    phi.dt = st.grid.dt;
    phi.values.assign(st.grid.n, 0.0);
    phi.tail = {0.0, -2.0 * data.a};

    std::vector<SampledFunction> warm;
    for (int it = 0; it < params.max_outer; ++it) {
        SweepProducts s =
            correction_sweep(model, data, params, delta, kgrid, phi, &warm);
        warm = s.yk;
        SampledFunction next = invert_via_green(green, s.w.W);
        const SampledFunction diff = lin_comb(next, phi, 1.0, -1.0);
        const double d = weighted_sup_norm(diff, k_weight);
        st.diffs.push_back(d);
        st.iterations = it + 1;
        st.w_bound_constant = s.w.bound_constant;
        st.w_fitted_rate = s.w.fitted_rate;
        phi = std::move(next);

        const double norm = weighted_sup_norm(phi, k_weight);
        if (norm > params.class_bound_M) {
            std::ostringstream os;
            os << "class escape: ||phi|| = " << norm << " > M = "
               << params.class_bound_M;
            throw contraction_error(os.str());
        }
        if (st.diffs.size() >= 2) {
            const double prev = st.diffs[st.diffs.size() - 2];
            if (prev > 0.0) {
                const double q = d / prev;
                if (st.diffs.size() == 2) st.ratio = q;
                if (q >= 1.0 && d > 1e3 * params.phi_tol) {
                    std::ostringstream os;
                    os << "contraction failed: ratio " << q
                       << " >= 1 (decrease t0)";
                    throw contraction_error(os.str());
                }
            }
        }
        if (d <= params.phi_tol) break;
    }

    // fixed-point residual ||L phi - W(phi)|| in the class weight
    SweepProducts s =
        correction_sweep(model, data, params, delta, kgrid, phi, &warm);
    const SampledFunction lphi =
        apply_L(ConvolutionKernels(data.a, data.b, data.m), phi);
    const SampledFunction resid = lin_comb(lphi, s.w.W, 1.0, -1.0);
    st.residual = weighted_sup_norm(resid, k_weight);
    st.w_bound_constant = s.w.bound_constant;
    st.w_fitted_rate = s.w.fitted_rate;
    st.phi_norm = weighted_sup_norm(phi, k_weight);
    st.phi_class_ok = st.phi_norm <= params.class_bound_M;
    st.phi = std::move(phi);
    return st;
}

SeedResult seed_ensemble(const PotentialModel& model, const WellPreparedData& data,
                         const AsymptoticParams& params, const SampledFunction& phi) {
    const KGrid kgrid = gauss_hermite(params.node_count);
    const std::size_t nk = kgrid.size();
    const double t0 = phi.t_right();

    SeedResult out;
    LaunchProfile& prof = out.profile;
    CharacteristicEnsemble& ens = out.ensemble;

    CorrectionResult y0 = interior_fixpoint(model, data, phi, 0.0, params);
    CorrectionResult yp = extremal_fixpoint(model, data, phi, Side::plus, params);
    CorrectionResult ym = extremal_fixpoint(model, data, phi, Side::minus, params);
    prof.Y0 = y0.Y;
    prof.Yplus = yp.Y;
    prof.Yminus = ym.Y;
    prof.y0_class_ok = y0.class_norm <= 1.0;
    prof.yplus_class_ok = yp.class_norm <= 1.0;

    ens.t = t0;
    ens.m = data.m;
    ens.K = kgrid.nodes;
    ens.w = kgrid.weights;
    ens.X.resize(nk);
    ens.R.resize(nk);
    ens.lnJ.resize(nk);
    prof.yk_at_t0.resize(nk);
    prof.r_frozen.resize(nk);

    ens.x_plus = data.x_plus + yp.Y.values.back();
    ens.x_minus = data.x_minus + ym.Y.values.back();

    const double scale = std::exp(-data.a * t0);
    for (std::size_t j = 0; j < nk; ++j) {
        const double Kj = kgrid.nodes[j];
        const CorrectionResult yk = interior_fixpoint(model, data, phi, Kj, params);
        prof.yk_at_t0[j] = yk.Y.values.back();
        ens.X[j] = data.x0 + Kj * scale + yk.Y.values.back();
        ens.R[j] = data.m * q_cdf(Kj);
        prof.r_frozen[j] = ens.R[j];
    }

    // clamp into the open extremal interval; events reported
    const double margin = 1e-9;
    for (std::size_t j = 0; j < nk; ++j) {
        const double lo = ens.x_minus + margin;
        const double hi = ens.x_plus - margin;
        if (ens.X[j] < lo) {
            ens.X[j] = lo;
            ++prof.clamped_nodes;
        } else if (ens.X[j] > hi) {
            ens.X[j] = hi;
            ++prof.clamped_nodes;
        }
    }

    for (std::size_t j = 0; j + 1 < nk; ++j)
        if (!(ens.X[j] < ens.X[j + 1]))
            throw ordering_error("characteristic ordering broken at seed");

    // Jacobians: centered differences in K, one-sided at the ends
    for (std::size_t j = 0; j < nk; ++j) {
        double dX, dK;
        if (j == 0) {
            dX = ens.X[1] - ens.X[0];
            dK = kgrid.nodes[1] - kgrid.nodes[0];
        } else if (j + 1 == nk) {
            dX = ens.X[nk - 1] - ens.X[nk - 2];
            dK = kgrid.nodes[nk - 1] - kgrid.nodes[nk - 2];
        } else {
            dX = ens.X[j + 1] - ens.X[j - 1];
            dK = kgrid.nodes[j + 1] - kgrid.nodes[j - 1];
        }
        ens.lnJ[j] = std::log(dX / dK);
    }
    return out;
}

} // namespace splitdyn
