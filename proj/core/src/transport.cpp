#include "splitdyn/transport.hpp"
#include "splitdyn/errors.hpp"
#include "splitdyn/quad.hpp"
#include "splitdyn/wellposed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splitdyn {

namespace {

const double kInvSqrtPi = 1.0 / std::sqrt(M_PI);

double q_pdf(double k) { return kInvSqrtPi * std::exp(-k * k); }

// Cubic Hermite model of the characteristic map on one node panel, from the
// endpoint positions and tracked Jacobians. Valid while the panel is smooth
// (adjacent characteristics not yet separated into different peaks).
struct PanelModel {
    double Kl, Kr, Xl, Xr, Jl, Jr;

    double x_of(double K) const {
        const double h = Kr - Kl;
        const double s = (K - Kl) / h;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * Xl + (s3 - 2 * s2 + s) * h * Jl +
               (-2 * s3 + 3 * s2) * Xr + (s3 - s2) * h * Jr;
    }
    double dxdk(double K) const {
        const double h = Kr - Kl;
        const double s = (K - Kl) / h;
        const double s2 = s * s;
        return ((6 * s2 - 6 * s) * Xl + (3 * s2 - 4 * s + 1) * h * Jl +
                (-6 * s2 + 6 * s) * Xr + (3 * s2 - 2 * s) * h * Jr) /
               h;
    }
    // monotone Newton with bisection safeguard
    double invert(double x, double k_start) const {
        double lo = Kl, hi = Kr, k = std::min(std::max(k_start, Kl), Kr);
        for (int it = 0; it < 60; ++it) {
            const double f = x_of(k) - x;
            if (f == 0.0) return k;
            if (f > 0)
                hi = k;
            else
                lo = k;
            const double d = dxdk(k);
            double knext = d > 0 ? k - f / d : 0.5 * (lo + hi);
            if (!(knext > lo && knext < hi)) knext = 0.5 * (lo + hi);
            if (std::abs(knext - k) <= 1e-15 * (1.0 + std::abs(k))) return knext;
            k = knext;
        }
        return k;
    }
};

// K-inversion at x between bracketing nodes: linearize at each end with the
// tracked Jacobians, cross-validate, and refine through the Hermite panel
// model when the two sides agree. Positions may straddle separated peaks, in
// which case neither linearization reaches across the gap and the inversion
// is unresolved.
struct Inversion {
    double K = 0.0;
    double dxdk = 1.0; // model Jacobian at the inverted label
    bool resolved = false;
};

// Tracked Jacobian at node j limited against the adjacent panel secants
// (Fritsch-Carlson bound), so every panel's Hermite model is monotone and
// the piecewise map stays C1 across nodes. The physical Jacobian can
// genuinely exceed the bound mid-transition, where the true slope varies
// strongly inside one panel; the limited model is then the best monotone
// C1 surrogate the node data supports.
double limited_slope(const CharacteristicEnsemble& ens, std::size_t j) {
    double s = std::exp(ens.lnJ[j]);
    if (j > 0) {
        const double sec =
            (ens.X[j] - ens.X[j - 1]) / (ens.K[j] - ens.K[j - 1]);
        s = std::min(s, 3.0 * sec);
    }
    if (j + 1 < ens.size()) {
        const double sec =
            (ens.X[j + 1] - ens.X[j]) / (ens.K[j + 1] - ens.K[j]);
        s = std::min(s, 3.0 * sec);
    }
    return std::max(s, 0.0);
}

PanelModel make_panel(const CharacteristicEnsemble& ens, std::size_t j) {
    return {ens.K[j],
            ens.K[j + 1],
            ens.X[j],
            ens.X[j + 1],
            limited_slope(ens, j),
            limited_slope(ens, j + 1)};
}

Inversion invert_in_bracket(const CharacteristicEnsemble& ens, std::size_t j,
                            double x) {
    const double Kl = ens.K[j], Kr = ens.K[j + 1];
    const double Xl = ens.X[j], Xr = ens.X[j + 1];
    const double dl = x - Xl, dr = Xr - x;
    if (dl <= 0.0) return {Kl, std::exp(ens.lnJ[j]), true};
    if (dr <= 0.0) return {Kr, std::exp(ens.lnJ[j + 1]), true};
    // exp(-lnJ) can overflow once a peak has contracted hard; do the product
    // in log space and saturate
    auto shift = [&](double dist, double lnj) {
        const double lg = std::log(dist) - lnj;
        return lg > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(lg);
    };
    const double kL = Kl + shift(dl, ens.lnJ[j]);
    const double kR = Kr - shift(dr, ens.lnJ[j + 1]);
    const bool l_in = kL <= Kr;
    const bool r_in = kR >= Kl;
    // the limited Hermite model is monotone for any panel, so it always
    // defines the inverse; the endpoint linearizations only grade how well
    // the panel resolves the point and start the Newton iteration
    const PanelModel panel = make_panel(ens, j);
    double start = 0.5 * (Kl + Kr);
    if (l_in && r_in)
        start = dl <= dr ? kL : kR;
    else if (l_in)
        start = kL;
    else if (r_in)
        start = kR;
    const double k = panel.invert(x, start);
    const bool resolved = l_in && r_in && std::abs(kL - kR) <= 0.25 * (Kr - Kl);
    return {k, std::max(panel.dxdk(k), 0.0), resolved};
}

Inversion invert_at(const CharacteristicEnsemble& ens, double x) {
    const std::size_t n = ens.size();
    if (n == 0 || x <= ens.x_minus || x >= ens.x_plus) return {0.0, 1.0, false};
    if (x <= ens.X[0]) {
        // below the lowest node: R is already ~0 there
        const double lg = std::log(std::max(ens.X[0] - x, 0.0)) - ens.lnJ[0];
        return {ens.K[0] - (lg > 700.0 ? std::numeric_limits<double>::infinity()
                                       : std::exp(lg)),
                std::exp(ens.lnJ[0]), true};
    }
    if (x >= ens.X[n - 1]) {
        const double lg = std::log(std::max(x - ens.X[n - 1], 0.0)) - ens.lnJ[n - 1];
        return {ens.K[n - 1] + (lg > 700.0 ? std::numeric_limits<double>::infinity()
                                           : std::exp(lg)),
                std::exp(ens.lnJ[n - 1]), true};
    }
    const auto it = std::upper_bound(ens.X.begin(), ens.X.end(), x);
    std::size_t j = static_cast<std::size_t>(it - ens.X.begin());
    if (j == 0) j = 1;
    return invert_in_bracket(ens, j - 1, x);
}

struct Reductions {
    double sigma, ell, energy, dissipation;
};

// all ∫ · dR reductions share the pairwise fixed summation order so that
// mirror-symmetric states reduce to exact zeros where they should
Reductions reduce_all(const CharacteristicEnsemble& ens, const PotentialModel& model) {
    const std::size_t n = ens.size();
    std::vector<double> h1(n), terms(n);
    for (std::size_t i = 0; i < n; ++i) h1[i] = model.H1(ens.X[i]);
    const double scale = ens.m * kInvSqrtPi;
    const double atom = 1.0 - ens.m;

    Reductions r{};
    for (std::size_t i = 0; i < n; ++i) terms[i] = ens.w[i] * h1[i];
    r.sigma = scale * paired_sum(terms) + atom * model.H1(ens.x_plus);
    for (std::size_t i = 0; i < n; ++i) terms[i] = ens.w[i] * ens.X[i];
    r.ell = scale * paired_sum(terms) + atom * ens.x_plus;
    for (std::size_t i = 0; i < n; ++i) terms[i] = ens.w[i] * model.H(ens.X[i]);
    r.energy = scale * paired_sum(terms) + atom * model.H(ens.x_plus);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = h1[i] - r.sigma;
        terms[i] = ens.w[i] * d * d;
    }
    const double da = model.H1(ens.x_plus) - r.sigma;
    r.dissipation = scale * paired_sum(terms) + atom * da * da;
    return r;
}

} // namespace

double sigma_of(const CharacteristicEnsemble& ens, const PotentialModel& model) {
    const std::size_t n = ens.size();
    std::vector<double> terms(n);
    for (std::size_t i = 0; i < n; ++i)
        terms[i] = ens.w[i] * model.H1(ens.X[i]);
    return ens.m * kInvSqrtPi * paired_sum(terms) +
           (1.0 - ens.m) * model.H1(ens.x_plus);
}

double sigma_by_parts(const CharacteristicEnsemble& ens, const PotentialModel& model,
                      Side side) {
    const std::size_t n = ens.size();
    // The x-integral over a node panel is transformed to the label variable,
    // x = X(K), dx = (dX/dK) dK, with X modeled per panel by the Hermite
    // interpolant of the endpoint positions and Jacobians; 5-point
    // Gauss-Legendre per panel. Beyond the outermost nodes the transported
    // value is constant to spectral accuracy, giving closed-form pieces.
    static const double gl_nodes[5] = {-0.90617984593866396, -0.53846931010568311,
                                       0.0, 0.53846931010568311,
                                       0.90617984593866396};
    static const double gl_weights[5] = {0.23692688505618908, 0.47862867049936647,
                                         0.56888888888888889, 0.47862867049936647,
                                         0.23692688505618908};
    const bool plus_side = side == Side::plus;

    // integrand weight: R for the plus form, 1 - R for the minus form
    auto r_weight = [&](double K) {
        const double r = ens.m * q_cdf(K);
        return plus_side ? r : 1.0 - r;
    };

    double I = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        if (ens.X[j + 1] < ens.X[j])
            throw ordering_error("ordering violation: nonpositive Jacobian");
        if (ens.X[j + 1] == ens.X[j]) continue;
        const PanelModel panel = make_panel(ens, j);
        const double mid = 0.5 * (panel.Kl + panel.Kr);
        const double half = 0.5 * (panel.Kr - panel.Kl);
        double acc = 0.0;
        for (int q = 0; q < 5; ++q) {
            const double K = mid + half * gl_nodes[q];
            const double jac = panel.dxdk(K);
            acc += gl_weights[q] * model.H2(panel.x_of(K)) * r_weight(K) *
                   std::max(jac, 0.0);
        }
        I += half * acc;
    }

    if (plus_side) {
        // left of the node range R is exponentially zero; right of it R = m
        // up to the atom, which sits at the upper limit and carries no width
        const double left = ens.R[0] * (model.H1(ens.X[0]) - model.H1(ens.x_minus));
        const double right = ens.m * (model.H1(ens.x_plus) - model.H1(ens.X[n - 1]));
        return model.H1(ens.x_plus) - (I + left + right);
    }
    const double left =
        (1.0 - ens.R[0]) * (model.H1(ens.X[0]) - model.H1(ens.x_minus));
    const double right =
        (1.0 - ens.m) * (model.H1(ens.x_plus) - model.H1(ens.X[n - 1]));
    return model.H1(ens.x_minus) + I + left + right;
}

namespace {

struct Derivative {
    std::vector<double> dX;
    std::vector<double> dlnJ;
    double dxm, dxp;
};

double eval_rhs(const CharacteristicEnsemble& base, const PotentialModel& model,
                const std::vector<double>& X, double xm, double xp,
                Derivative& out, std::vector<double>& h1,
                std::vector<double>& terms) {
    const std::size_t n = X.size();
    for (std::size_t i = 0; i < n; ++i) h1[i] = model.H1(X[i]);
    for (std::size_t i = 0; i < n; ++i) terms[i] = base.w[i] * h1[i];
    const double sigma = base.m * kInvSqrtPi * paired_sum(terms) +
                         (1.0 - base.m) * model.H1(xp);
    for (std::size_t i = 0; i < n; ++i) out.dX[i] = sigma - h1[i];
    out.dxm = sigma - model.H1(xm);
    out.dxp = sigma - model.H1(xp);
    for (std::size_t i = 0; i < n; ++i) out.dlnJ[i] = -model.H2(X[i]);
    return sigma;
}

} // namespace

void step(CharacteristicEnsemble& ens, const PotentialModel& model, double dt,
          double* stage_sigmas) {
    if (!(dt > 0.0)) throw numeric_error("step: dt must be positive");
    const std::size_t n = ens.size();
    thread_local std::vector<double> h1, terms, x1;
    thread_local Derivative k1, k2, k3, k4;
    h1.resize(n);
    terms.resize(n);
    x1.resize(n);
    for (Derivative* k : {&k1, &k2, &k3, &k4}) {
        k->dX.resize(n);
        k->dlnJ.resize(n);
    }

    const double s1 =
        eval_rhs(ens, model, ens.X, ens.x_minus, ens.x_plus, k1, h1, terms);
    for (std::size_t i = 0; i < n; ++i) x1[i] = ens.X[i] + 0.5 * dt * k1.dX[i];
    const double s2 = eval_rhs(ens, model, x1, ens.x_minus + 0.5 * dt * k1.dxm,
                               ens.x_plus + 0.5 * dt * k1.dxp, k2, h1, terms);
    for (std::size_t i = 0; i < n; ++i) x1[i] = ens.X[i] + 0.5 * dt * k2.dX[i];
    const double s3 = eval_rhs(ens, model, x1, ens.x_minus + 0.5 * dt * k2.dxm,
                               ens.x_plus + 0.5 * dt * k2.dxp, k3, h1, terms);
    for (std::size_t i = 0; i < n; ++i) x1[i] = ens.X[i] + dt * k3.dX[i];
    const double s4 = eval_rhs(ens, model, x1, ens.x_minus + dt * k3.dxm,
                               ens.x_plus + dt * k3.dxp, k4, h1, terms);
    if (stage_sigmas) {
        stage_sigmas[0] = s1;
        stage_sigmas[1] = s2;
        stage_sigmas[2] = s3;
        stage_sigmas[3] = s4;
    }

    const double c = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
        ens.X[i] += c * (k1.dX[i] + 2.0 * k2.dX[i] + 2.0 * k3.dX[i] + k4.dX[i]);
        ens.lnJ[i] +=
            c * (k1.dlnJ[i] + 2.0 * k2.dlnJ[i] + 2.0 * k3.dlnJ[i] + k4.dlnJ[i]);
    }
    ens.x_minus += c * (k1.dxm + 2.0 * k2.dxm + 2.0 * k3.dxm + k4.dxm);
    ens.x_plus += c * (k1.dxp + 2.0 * k2.dxp + 2.0 * k3.dxp + k4.dxp);
    ens.t += dt;

    // inversions are rejected; collapse to equal doubles once adjacent
    // characteristics contract below machine resolution is not a crossing
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (ens.X[i + 1] < ens.X[i])
            throw ordering_error("characteristic crossing (reduce dt)");
    if (ens.X[0] < ens.x_minus || ens.X[n - 1] > ens.x_plus)
        throw ordering_error("characteristic crossing (reduce dt)");
}

double interpolate_R(const CharacteristicEnsemble& ens, double x) {
    if (x < ens.x_minus) return 0.0;
    if (x >= ens.x_plus) return 1.0;
    const Inversion inv = invert_at(ens, x);
    return ens.m * q_cdf(inv.K);
}

std::optional<double> invert_position(const CharacteristicEnsemble& ens, double x) {
    if (x <= ens.x_minus || x >= ens.x_plus) return std::nullopt;
    return invert_at(ens, x).K;
}

double density_at(const CharacteristicEnsemble& ens, double x) {
    if (x <= ens.x_minus || x >= ens.x_plus) return 0.0;
    const Inversion inv = invert_at(ens, x);
    if (!(inv.dxdk > 0.0)) return 0.0;
    return ens.m * q_pdf(inv.K) / inv.dxdk;
}

namespace {

struct MassSplit {
    double m_minus, m_zero, m_plus;
    bool boundary_hit;
};

// Node-atom bin sums (pairwise order, so mirror-symmetric states split
// exactly evenly). The transported measure of the simulation is atomic, and
// only the atomic sums keep the conserved first moment consistent with the
// published masses. A label pinned at the separatrix can be passed by run()
// to apply the continuum half/half split of a trapped separatrix node.
MassSplit classify_masses(const CharacteristicEnsemble& ens,
                          const SpinodalChart& chart, bool have_sep = false,
                          double k_sep = 0.0) {
    MassSplit ms{};
    const std::size_t n = ens.size();
    std::vector<double> tm(n, 0.0), tz(n, 0.0), tp(n, 0.0);
    const double scale = ens.m * kInvSqrtPi;
    ms.boundary_hit = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double mass = scale * ens.w[i];
        const double x = ens.X[i];
        if (x == chart.x_star_minus || x == chart.x_star_plus)
            ms.boundary_hit = true;
        if (x < chart.x_star_minus) {
            tm[i] = mass;
        } else if (x > chart.x_star_plus) {
            tp[i] = mass;
        } else if (have_sep &&
                   std::abs(ens.K[i] - k_sep) <= 1e-9 * std::max(1.0, std::abs(k_sep))) {
            // separatrix-trapped node: its panel's mass splits evenly in the
            // transported continuum
            tm[i] = 0.5 * mass;
            tp[i] = 0.5 * mass;
        } else {
            tz[i] = mass;
        }
    }
    ms.m_minus = paired_sum(tm);
    ms.m_zero = paired_sum(tz);
    ms.m_plus = paired_sum(tp);
    const double atom = 1.0 - ens.m;
    if (ens.x_plus > chart.x_star_plus)
        ms.m_plus += atom;
    else if (ens.x_plus >= chart.x_star_minus)
        ms.m_zero += atom;
    else
        ms.m_minus += atom;
    return ms;
}

} // namespace

StateSnapshot functionals(const CharacteristicEnsemble& ens,
                          const PotentialModel& model, const SpinodalChart& chart) {
    StateSnapshot s;
    s.t = ens.t;
    const Reductions r = reduce_all(ens, model);
    s.sigma = r.sigma;
    s.ell = r.ell;
    s.energy = r.energy;
    s.dissipation = r.dissipation;
    s.x_minus_char = ens.x_minus;
    s.x_plus_char = ens.x_plus;

    const MassSplit ms = classify_masses(ens, chart);
    s.m_minus = ms.m_minus;
    s.m_zero = ms.m_zero;
    s.m_plus = ms.m_plus;
    s.boundary_node_hit = ms.boundary_hit;

    double best = -1.0, best_x = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (ens.X[i] > chart.x_star_minus && ens.X[i] < chart.x_star_plus) {
            const double rho = ens.m * q_pdf(ens.K[i]) * std::exp(-ens.lnJ[i]);
            if (rho > best) {
                best = rho;
                best_x = ens.X[i];
            }
        }
    }
    if (best >= 0.0) {
        s.ridge_pos = best_x;
        s.ridge_density = best;
    } else {
        s.ridge_pos = std::numeric_limits<double>::quiet_NaN();
        s.ridge_density = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

namespace {

// the four per-stage force values of one integrator step; a passive tracer
// replayed against them reproduces bit for bit what a zero-weight ensemble
// member would have done
struct StageSigmas {
    double s[4];
};

struct TracerState {
    double X;
    double lnJ;
};

void tracer_step(TracerState& tr, const PotentialModel& model,
                 const StageSigmas& st, double dt) {
    const double k1 = st.s[0] - model.H1(tr.X);
    const double j1 = -model.H2(tr.X);
    const double x2 = tr.X + 0.5 * dt * k1;
    const double k2 = st.s[1] - model.H1(x2);
    const double j2 = -model.H2(x2);
    const double x3 = tr.X + 0.5 * dt * k2;
    const double k3 = st.s[2] - model.H1(x3);
    const double j3 = -model.H2(x3);
    const double x4 = tr.X + dt * k3;
    const double k4 = st.s[3] - model.H1(x4);
    const double j4 = -model.H2(x4);
    tr.X += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    tr.lnJ += dt / 6.0 * (j1 + 2.0 * j2 + 2.0 * j3 + j4);
}

// seed state of a tracer with label K, interpolated from the seeded ensemble
// (the seed map is linear in K to launch accuracy)
TracerState tracer_seed(const CharacteristicEnsemble& seed, double K) {
    const auto it = std::upper_bound(seed.K.begin(), seed.K.end(), K);
    std::size_t j = static_cast<std::size_t>(it - seed.K.begin());
    if (j == 0) j = 1;
    if (j == seed.size()) j = seed.size() - 1;
    const double t =
        (K - seed.K[j - 1]) / (seed.K[j] - seed.K[j - 1]);
    return {seed.X[j - 1] + t * (seed.X[j] - seed.X[j - 1]),
            seed.lnJ[j - 1] + t * (seed.lnJ[j] - seed.lnJ[j - 1])};
}

} // namespace
TimeSeries run(CharacteristicEnsemble ens, const PotentialModel& model,
               const SpinodalChart& chart, double t_end, double dt, int cadence) {
    if (cadence < 1) cadence = 1;
    TimeSeries ts;
    ts.dt = dt;
    const CharacteristicEnsemble seed = ens;
    const long nsteps = std::lround((t_end - ens.t) / dt);
    ts.snapshots.reserve(static_cast<std::size_t>(nsteps / cadence) + 2);

    std::vector<StageSigmas> stages;
    stages.reserve(static_cast<std::size_t>(nsteps));
    // (K, mass) of the nodes inside the spinodal interval per snapshot, so
    // the separatrix-trapped correction can be applied once k_sep is known
    struct InsideNode {
        double K, mass;
    };
    std::vector<std::vector<InsideNode>> inside_at_snap;

    auto record = [&](const CharacteristicEnsemble& e) {
        ts.snapshots.push_back(functionals(e, model, chart));
        std::vector<InsideNode> inside;
        const double scale = e.m * kInvSqrtPi;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e.X[i] >= chart.x_star_minus && e.X[i] <= chart.x_star_plus)
                inside.push_back({e.K[i], scale * e.w[i]});
        inside_at_snap.push_back(std::move(inside));
    };

    record(ens);
    ts.sup_abs_sigma = std::abs(ts.snapshots.front().sigma);
    ts.sup_abs_x_minus = std::abs(ens.x_minus);
    ts.sup_abs_x_plus = std::abs(ens.x_plus);
    ts.sup_delta_x = ens.x_plus - ens.x_minus;

    for (long k = 1; k <= nsteps; ++k) {
        StageSigmas st{};
        step(ens, model, dt, st.s);
        stages.push_back(st);
        ts.steps = k;
        ts.sup_abs_sigma = std::max({ts.sup_abs_sigma, std::abs(st.s[0]),
                                     std::abs(st.s[3])});
        ts.sup_abs_x_minus = std::max(ts.sup_abs_x_minus, std::abs(ens.x_minus));
        ts.sup_abs_x_plus = std::max(ts.sup_abs_x_plus, std::abs(ens.x_plus));
        ts.sup_delta_x = std::max(ts.sup_delta_x, ens.x_plus - ens.x_minus);
        if (k % cadence == 0 || k == nsteps) record(ens);
    }

    // Separatrix refinement: the label splitting left- from right-going
    // characteristics, found by bisection on passive tracers replayed
    // against the recorded stage forces (bit-for-bit the discrete flow of a
    // zero-weight node). A node trapped on the separatrix then has its mass
    // split evenly, which is its transported continuum limit; without this
    // the symmetric launch parks one quadrature atom on the unstable point
    // forever.
    const double sig_end = ts.snapshots.back().sigma;
    const bool splitting = ens.X.front() < chart.x_star_minus &&
                           ens.X.back() > chart.x_star_plus &&
                           sig_end > chart.sigma_star_minus &&
                           sig_end < chart.sigma_star_plus;
    if (splitting) {
        const double x_rest = branch_solve(model, chart, sig_end, Branch::zero);
        auto goes_right = [&](double K) {
            TracerState tr = tracer_seed(seed, K);
            for (const auto& st : stages) tracer_step(tr, model, st, dt);
            return tr.X >= x_rest;
        };
        double klo = ens.K.front(), khi = ens.K.back();
        // narrow to the node panel containing the split to save tracer runs
        for (std::size_t i = 0; i + 1 < ens.size(); ++i) {
            if (ens.X[i] < x_rest && ens.X[i + 1] >= x_rest) {
                klo = ens.K[i];
                khi = ens.K[i + 1];
                break;
            }
        }
        for (int it = 0;
             it < 64 && khi - klo > 1e-15 * std::max(1.0, std::abs(klo)); ++it) {
            const double mid = 0.5 * (klo + khi);
            if (goes_right(mid))
                khi = mid;
            else
                klo = mid;
        }
        const double k_sep = 0.5 * (klo + khi);
        ts.k_sep = k_sep;
        ts.have_separatrix = true;
        // replay the separatrix tracer once more, recording its state at the
        // snapshot times
        {
            TracerState tr = tracer_seed(seed, k_sep);
            ts.sep_x.assign(ts.snapshots.size(), 0.0);
            ts.sep_lnj.assign(ts.snapshots.size(), 0.0);
            ts.sep_x[0] = tr.X;
            ts.sep_lnj[0] = tr.lnJ;
            std::size_t snap = 1;
            for (long k = 1; k <= nsteps; ++k) {
                tracer_step(tr, model, stages[static_cast<std::size_t>(k - 1)], dt);
                if ((k % cadence == 0 || k == nsteps) && snap < ts.sep_x.size()) {
                    ts.sep_x[snap] = tr.X;
                    ts.sep_lnj[snap] = tr.lnJ;
                    ++snap;
                }
            }
        }
        for (std::size_t i = 0; i < ts.snapshots.size(); ++i) {
            for (const InsideNode& node : inside_at_snap[i]) {
                if (std::abs(node.K - k_sep) <=
                    1e-9 * std::max(1.0, std::abs(k_sep))) {
                    StateSnapshot& s = ts.snapshots[i];
                    s.m_zero -= node.mass;
                    s.m_minus += 0.5 * node.mass;
                    s.m_plus += 0.5 * node.mass;
                }
            }
        }
    }
    return ts;
}

} // namespace splitdyn
