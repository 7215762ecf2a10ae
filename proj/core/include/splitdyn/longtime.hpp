#pragma once

#include "splitdyn/potential.hpp"
#include "splitdyn/transport.hpp"

#include <optional>
#include <string>

namespace splitdyn {

/// Equilibrium detection: earliest snapshot time t such that dissipation
/// stays at or below tol_d from t on, the force drift over [t, t+window] is
/// at most tol_d, and a full window fits before the series end. Also exposes
/// the trapezoid of D over the whole series.
struct EquilibriumStop {
    double t_stop = 0.0;
    std::size_t index = 0;
    double integral_D = 0.0;
};

std::optional<EquilibriumStop> detect_equilibrium(const TimeSeries& series,
                                                  double tol_d, double window);

/// Branch inverses of the limiting force. Inside the spinodal force interval
/// all three branches exist; outside, only the indicated stable one (the
/// others are NaN).
struct LimitTriple {
    double x_minus, x_zero, x_plus;
    bool three_branch;
};

LimitTriple limit_triple(const PotentialModel& model, const SpinodalChart& chart,
                         double sigma_inf);

enum class DecayVerdict { pass, fail, decayed_below_floor, not_confined };

/// Exponential-decay fit of the spinodal ridge density over the trailing
/// window where the force stays eta-inside the spinodal force interval.
/// Pass requires the fitted rate to reach 0.9x the minimum spinodal |H''|
/// over the band visited by the confined force values.
struct DecayFit {
    DecayVerdict verdict = DecayVerdict::fail;
    double epsilon_hat = 0.0;
    double threshold = 0.0; // 0.9 * min spinodal curvature over the band
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::size_t points = 0;
};

DecayFit spinodal_decay(const TimeSeries& series, const SpinodalChart& chart,
                        const PotentialModel& model, double eta);

/// Scenario tags of the long-time classification.
enum class LimitCase {
    above,     // liminf sigma >= upper spinodal force: single stable point
    confined,  // sigma eventually stays strictly inside the force interval
    straddles, // sigma crosses the upper spinodal force
    touches    // limsup sigma equals the upper spinodal force from inside
};

struct UniquenessReport {
    bool agree = false;
    double sigma_even = 0.0, sigma_odd = 0.0;
    double mass_diff = 0.0; // max |m_i(even) - m_i(odd)|
    LimitCase scenario = LimitCase::confined;
    double sign_quantity = 0.0; // -2 (a2 (1 - m_plus_inf) - m_plus_inf b_lin)
    bool h4_hypothesis_met = false;
    bool ell_outside_spinodal = false;
    std::string note;
};

/// Interleaves two diverging snapshot subsequences past the stop index,
/// extracts (sigma, masses) limits from each and compares them at 1e-6;
/// classifies the scenario and reports whether the quartic-curvature and
/// outside-moment hypotheses (under which the limit is provably unique)
/// hold -- reported, never assumed.
UniquenessReport uniqueness_probe(const TimeSeries& series, const PotentialModel& model,
                                  const SpinodalChart& chart,
                                  const BranchExpansion& expansion,
                                  std::size_t stop_index, double ell_star);

struct EquilibriumReport {
    bool converged = false;
    double sigma_inf = 0.0;
    double x_minus = 0.0, x_zero = 0.0, x_plus = 0.0;
    double m_minus = 0.0, m_zero = 0.0, m_plus = 0.0;
    double m_tilde = 0.0; // mass gained by the stable peak: m_plus(inf) - (1-m)
    double constraint_residual = 0.0; // |sum m_i x_i - ell_star|
    double slope_residual = 0.0;      // max_i |H'(x_i) - sigma_inf|
    double dissipation_at_stop = 0.0;
    double integral_D = 0.0;
    double energy_drop = 0.0; // E(first) - E(last)
    double t_stop = 0.0;
    DecayFit decay;
    UniquenessReport uniqueness;
    bool boundary_caveat = false; // publish only m_plus and m_minus+m_zero
    double m_minus_plus_zero = 0.0;
};

/// Full post-processing of a finished series. Throws convergence_error when
/// no equilibrium window is found ("not converged: extend t_end").
EquilibriumReport make_report(const TimeSeries& series, const PotentialModel& model,
                              const SpinodalChart& chart, double m, double ell_star,
                              double tol_d, double window, double decay_eta);

} // namespace splitdyn
