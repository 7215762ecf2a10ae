#pragma once

#include "splitdyn/ensemble.hpp"
#include "splitdyn/potential.hpp"

#include <optional>
#include <vector>

namespace splitdyn {

/// Scalar diagnostics of one ensemble state. Masses are the node-atom sums
/// of the three bins split at the spinodal points (the atom riding the upper
/// extremal counts on its side); run() additionally splits a node trapped on
/// the separatrix evenly between the outer bins, which is its transported
/// continuum limit. The ridge is the maximum reconstructed density
/// m Q'(K)/(dX/dK) over nodes inside the spinodal interval.
struct StateSnapshot {
    double t = 0.0;
    double sigma = 0.0;
    double ell = 0.0;
    double energy = 0.0;
    double dissipation = 0.0;
    double m_minus = 0.0;
    double m_zero = 0.0;
    double m_plus = 0.0;
    double x_minus_char = 0.0;
    double x_plus_char = 0.0;
    double ridge_pos = 0.0;     // NaN when the spinodal population is empty
    double ridge_density = 0.0; // NaN when absent
    bool boundary_node_hit = false; // a node sits exactly on x_star or x_star_plus
};

struct TimeSeries {
    std::vector<StateSnapshot> snapshots;
    double sup_abs_x_minus = 0.0;
    double sup_abs_x_plus = 0.0;
    double sup_abs_sigma = 0.0;
    double sup_delta_x = 0.0; // sup of X_plus - X_minus
    long steps = 0;
    double dt = 0.0;
    bool have_separatrix = false;
    double k_sep = 0.0; // label splitting left- from right-going characteristics
    // separatrix tracer state at the snapshot times (empty without a split);
    // the transported spinodal mass decays like Q'(k_sep) * gap * e^{-lnJ},
    // so the tracer's Jacobian growth rate is the spinodal-mass decay rate
    std::vector<double> sep_x;
    std::vector<double> sep_lnj;
};

/// Self-consistent force sigma = ∫ H' dR: Gauss-Hermite over the interior
/// nodes (pairwise fixed-order reduction) plus the atom term.
double sigma_of(const CharacteristicEnsemble& ens, const PotentialModel& model);

/// Integration-by-parts forms: sigma = H'(X+) - ∫ H'' R dx (plus side) or
/// sigma = H'(X-) + ∫ H'' (1-R) dx, the x-integral transformed to K-space
/// through finite-difference Jacobians with analytic treatment of the
/// regions beyond the outermost nodes. A nonpositive Jacobian throws
/// ordering_error.
double sigma_by_parts(const CharacteristicEnsemble& ens, const PotentialModel& model,
                      Side side);

/// One classical Runge-Kutta step of the coupled system; sigma is recomputed
/// from the stage positions at every stage, which is what conserves the
/// first moment to integrator order. Ordering is checked after the step.
/// stage_sigmas, when given, receives the four per-stage force values (used
/// by run() to replay passive tracer characteristics).
void step(CharacteristicEnsemble& ens, const PotentialModel& model, double dt,
          double* stage_sigmas = nullptr);

/// Integrates to t_end with fixed dt, recording a snapshot every `cadence`
/// steps (and at the final time), and maintaining the sup monitors.
TimeSeries run(CharacteristicEnsemble seed, const PotentialModel& model,
               const SpinodalChart& chart, double t_end, double dt, int cadence);

StateSnapshot functionals(const CharacteristicEnsemble& ens,
                          const PotentialModel& model, const SpinodalChart& chart);

/// Transported distribution R(x) reconstructed from the node set: exact node
/// values R_i at X_i, locally inverted between nodes with the tracked
/// Jacobians, 0 left of the lower extremal, jump of 1-m at the atom.
double interpolate_R(const CharacteristicEnsemble& ens, double x);

/// Inverse characteristic map at x (the K with X(t,K) = x), by bracketing on
/// the node set and Jacobian-based local inversion; returns nullopt outside
/// (x_minus, x_plus).
std::optional<double> invert_position(const CharacteristicEnsemble& ens, double x);

/// Reconstructed density at x: m Q'(K(x)) / (dX/dK)(K(x)).
double density_at(const CharacteristicEnsemble& ens, double x);

} // namespace splitdyn
