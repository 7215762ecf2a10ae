#include "splitdyn/longtime.hpp"
#include "splitdyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace splitdyn {

namespace {

double trapezoid_D(const TimeSeries& s) {
    double acc = 0.0;
    for (std::size_t i = 1; i < s.snapshots.size(); ++i) {
        const auto& a = s.snapshots[i - 1];
        const auto& b = s.snapshots[i];
        acc += 0.5 * (a.dissipation + b.dissipation) * (b.t - a.t);
    }
    return acc;
}

} // namespace

std::optional<EquilibriumStop> detect_equilibrium(const TimeSeries& series,
                                                  double tol_d, double window) {
    const auto& snaps = series.snapshots;
    if (snaps.empty()) return std::nullopt;
    const double t_end = snaps.back().t;
    // suffix max of D
    std::vector<double> dmax(snaps.size());
    double run = 0.0;
    for (std::size_t i = snaps.size(); i-- > 0;) {
        run = std::max(run, snaps[i].dissipation);
        dmax[i] = run;
    }
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        if (snaps[i].t + window > t_end + 1e-12) break;
        if (dmax[i] > tol_d) continue;
        double lo = snaps[i].sigma, hi = snaps[i].sigma;
        for (std::size_t j = i; j < snaps.size() && snaps[j].t <= snaps[i].t + window;
             ++j) {
            lo = std::min(lo, snaps[j].sigma);
            hi = std::max(hi, snaps[j].sigma);
        }
        if (hi - lo <= tol_d)
            return EquilibriumStop{snaps[i].t, i, trapezoid_D(series)};
    }
    return std::nullopt;
}

LimitTriple limit_triple(const PotentialModel& model, const SpinodalChart& chart,
                         double sigma_inf) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (sigma_inf > chart.sigma_star_minus && sigma_inf < chart.sigma_star_plus) {
        return {branch_solve(model, chart, sigma_inf, Branch::minus),
                branch_solve(model, chart, sigma_inf, Branch::zero),
                branch_solve(model, chart, sigma_inf, Branch::plus), true};
    }
    if (sigma_inf >= chart.sigma_star_plus)
        return {nan, nan, branch_solve(model, chart, sigma_inf, Branch::plus), false};
    if (sigma_inf <= chart.sigma_star_minus)
        return {branch_solve(model, chart, sigma_inf, Branch::minus), nan, nan, false};
    throw numeric_error("no admissible limit");
}

DecayFit spinodal_decay(const TimeSeries& series, const SpinodalChart& chart,
                        const PotentialModel& model, double eta) {
    DecayFit fit;
    const double lo_band = chart.sigma_star_minus + eta;
    const double hi_band = chart.sigma_star_plus - eta;
    const double floor = 1e-14;

    // trailing stretch of confined snapshots
    const auto& snaps = series.snapshots;
    std::size_t end = snaps.size();
    while (end > 0 &&
           (snaps[end - 1].sigma <= lo_band || snaps[end - 1].sigma >= hi_band))
        --end;
    if (end == 0) {
        fit.verdict = DecayVerdict::not_confined;
        return fit;
    }
    std::size_t begin = end;
    while (begin > 0 && snaps[begin - 1].sigma > lo_band &&
           snaps[begin - 1].sigma < hi_band)
        --begin;
    if (end < snaps.size()) {
        // the force left the band after the stretch: hypothesis violated for
        // the trailing window
        fit.verdict = DecayVerdict::not_confined;
        return fit;
    }

    // curvature threshold over the band of spinodal states visited by the
    // confined force values
    double sig_lo = snaps[begin].sigma, sig_hi = snaps[begin].sigma;
    for (std::size_t i = begin; i < end; ++i) {
        sig_lo = std::min(sig_lo, snaps[i].sigma);
        sig_hi = std::max(sig_hi, snaps[i].sigma);
    }
    const double x_hi = branch_solve(model, chart, sig_lo, Branch::zero);
    const double x_lo = branch_solve(model, chart, sig_hi, Branch::zero);
    double min_curv = std::numeric_limits<double>::infinity();
    const int samples = 512;
    for (int i = 0; i <= samples; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / samples;
        min_curv = std::min(min_curv, std::abs(model.H2(x)));
    }
    fit.threshold = 0.9 * min_curv;

    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t mcount = 0;
    for (std::size_t i = begin; i < end; ++i) {
        const double r = snaps[i].ridge_density;
        if (!std::isfinite(r) || r <= floor) continue;
        const double t = snaps[i].t, y = std::log(r);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++mcount;
        fit.window_hi = t;
        if (mcount == 1) fit.window_lo = t;
    }
    fit.points = mcount;
    if (mcount < 3) {
        fit.verdict = DecayVerdict::decayed_below_floor;
        return fit;
    }
    const double denom = static_cast<double>(mcount) * stt - st * st;
    const double slope = (static_cast<double>(mcount) * sty - st * sy) / denom;
    fit.epsilon_hat = -slope;
    fit.verdict = fit.epsilon_hat >= fit.threshold ? DecayVerdict::pass
                                                   : DecayVerdict::fail;
    return fit;
}

namespace {

struct SubseqLimit {
    double sigma;
    double m_minus, m_zero, m_plus;
};

// limit estimate of a diverging subsequence: mean over its trailing half
SubseqLimit subseq_limit(const TimeSeries& series, std::size_t start,
                         std::size_t stride, std::size_t from) {
    const auto& snaps = series.snapshots;
    std::vector<std::size_t> idx;
    for (std::size_t i = from + start; i < snaps.size(); i += stride)
        idx.push_back(i);
    if (idx.empty()) idx.push_back(snaps.size() - 1);
    const std::size_t half = idx.size() / 2;
    SubseqLimit lim{0, 0, 0, 0};
    std::size_t cnt = 0;
    for (std::size_t k = half; k < idx.size(); ++k) {
        const auto& s = snaps[idx[k]];
        lim.sigma += s.sigma;
        lim.m_minus += s.m_minus;
        lim.m_zero += s.m_zero;
        lim.m_plus += s.m_plus;
        ++cnt;
    }
    const double c = static_cast<double>(cnt);
    lim.sigma /= c;
    lim.m_minus /= c;
    lim.m_zero /= c;
    lim.m_plus /= c;
    return lim;
}

} // namespace

UniquenessReport uniqueness_probe(const TimeSeries& series, const PotentialModel& model,
                                  const SpinodalChart& chart,
                                  const BranchExpansion& expansion,
                                  std::size_t stop_index, double ell_star) {
    UniquenessReport rep;
    const SubseqLimit even = subseq_limit(series, 0, 2, stop_index);
    const SubseqLimit odd = subseq_limit(series, 1, 2, stop_index);
    rep.sigma_even = even.sigma;
    rep.sigma_odd = odd.sigma;
    rep.mass_diff = std::max({std::abs(even.m_minus - odd.m_minus),
                              std::abs(even.m_zero - odd.m_zero),
                              std::abs(even.m_plus - odd.m_plus)});
    rep.agree =
        std::abs(even.sigma - odd.sigma) <= 1e-6 && rep.mass_diff <= 1e-6;

    // scenario from the trailing force range
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = stop_index; i < series.snapshots.size(); ++i) {
        lo = std::min(lo, series.snapshots[i].sigma);
        hi = std::max(hi, series.snapshots[i].sigma);
    }
    const double tol = 1e-9;
    if (lo >= chart.sigma_star_plus - tol)
        rep.scenario = LimitCase::above;
    else if (hi < chart.sigma_star_plus - tol && lo > chart.sigma_star_minus + tol)
        rep.scenario = LimitCase::confined;
    else if (hi > chart.sigma_star_plus + tol)
        rep.scenario = LimitCase::straddles;
    else
        rep.scenario = LimitCase::touches;

    const double m_plus_inf = 0.5 * (even.m_plus + odd.m_plus);
    rep.sign_quantity =
        -2.0 * (expansion.a2 * (1.0 - m_plus_inf) - m_plus_inf * expansion.b_lin);
    rep.h4_hypothesis_met = model.H4(chart.x_star_minus) > 0.0 &&
                            model.H4(chart.x_star_plus) > 0.0;
    rep.ell_outside_spinodal =
        ell_star < chart.x_star_minus || ell_star > chart.x_star_plus;
    if (!rep.h4_hypothesis_met) rep.note = "hypothesis H4>0 not met";
    if (!rep.agree)
        rep.note = rep.note.empty() ? "non-unique limit detected"
                                    : rep.note + "; non-unique limit detected";
    return rep;
}

EquilibriumReport make_report(const TimeSeries& series, const PotentialModel& model,
                              const SpinodalChart& chart, double m, double ell_star,
                              double tol_d, double window, double decay_eta) {
    const auto stop = detect_equilibrium(series, tol_d, window);
    if (!stop) throw convergence_error("not converged: extend t_end");

    EquilibriumReport rep;
    rep.converged = true;
    rep.t_stop = stop->t_stop;
    rep.integral_D = stop->integral_D;
    rep.dissipation_at_stop = series.snapshots[stop->index].dissipation;
    rep.energy_drop =
        series.snapshots.front().energy - series.snapshots.back().energy;

    // limiting force: trailing mean past the stop
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = stop->index; i < series.snapshots.size(); ++i) {
        acc += series.snapshots[i].sigma;
        ++cnt;
    }
    rep.sigma_inf = acc / static_cast<double>(cnt);

    const LimitTriple triple = limit_triple(model, chart, rep.sigma_inf);
    rep.x_minus = triple.x_minus;
    rep.x_zero = triple.x_zero;
    rep.x_plus = triple.x_plus;

    const StateSnapshot& last = series.snapshots.back();
    rep.m_minus = last.m_minus;
    rep.m_zero = last.m_zero;
    rep.m_plus = last.m_plus;
    rep.m_tilde = last.m_plus - (1.0 - m);
    rep.m_minus_plus_zero = last.m_minus + last.m_zero;

    double constraint = 0.0;
    double slope_resid = 0.0;
    auto add_branch = [&](double mass, double x) {
        if (std::isfinite(x)) {
            constraint += mass * x;
            slope_resid = std::max(slope_resid, std::abs(model.H1(x) - rep.sigma_inf));
        } else if (mass > 1e-12) {
            constraint = std::numeric_limits<double>::quiet_NaN();
        }
    };
    add_branch(rep.m_minus, rep.x_minus);
    add_branch(rep.m_zero, rep.x_zero);
    add_branch(rep.m_plus, rep.x_plus);
    rep.constraint_residual = std::abs(constraint - ell_star);
    rep.slope_residual = slope_resid;

    rep.decay = spinodal_decay(series, chart, model, decay_eta);
    const BranchExpansion expansion = branch_expansion(model, chart);
    rep.uniqueness =
        uniqueness_probe(series, model, chart, expansion, stop->index, ell_star);

    // a node sitting exactly on a bin boundary degrades the individual
    // minus/zero masses; only their sum and m_plus are then published
    for (const auto& s : series.snapshots)
        if (s.boundary_node_hit) rep.boundary_caveat = true;
    return rep;
}

} // namespace splitdyn
