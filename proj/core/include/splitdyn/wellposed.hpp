#pragma once

#include "splitdyn/ensemble.hpp"
#include "splitdyn/potential.hpp"
#include "splitdyn/quad.hpp"
#include "splitdyn/sampled.hpp"

#include <span>
#include <vector>

namespace splitdyn {

/// Gaussian distribution function Q(y) = (1/sqrt(pi)) ∫_{-inf}^y e^{-eta^2}.
double q_cdf(double y);

/// Launch-construction parameters. delta <= 0 selects the default
/// min(|a|, b)/4; the grid spans [t0 - span_factor/|theta2|, t0] (capped so
/// no exponent in the convolutions exceeds ~600).
struct AsymptoticParams {
    double t0 = -10.0;
    double delta = 0.0;          // <= 0: auto
    double class_bound_M = 10.0; // bound of the weighted force class
    double dt = 1e-2;
    int node_count = 129;
    double span_factor = 30.0;
    double phi_tol = 1e-10;        // weighted-norm successive difference
    double correction_tol = 1e-12; // per-characteristic fixed points
    int max_outer = 100;
    int max_inner = 200;
};

struct LaunchGrid {
    double t_left = 0.0;
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t n = 0;
    double delta = 0.0;
    double theta2 = 0.0;
    bool span_capped = false;
};

LaunchGrid make_launch_grid(const WellPreparedData& data,
                            const AsymptoticParams& params);

struct CorrectionResult {
    SampledFunction Y;
    int iterations = 0;
    double last_diff = 0.0;
    double ratio = 0.0;     // worst successive-difference quotient observed
    double class_norm = 0.0; // sup |Y| e^{(a - delta) t}; membership iff <= 1
};

/// Fixed point of Y(t) = ∫_{-inf}^t e^{-k (t-s)} [phi(s) - rho(Y)(s)] ds for
/// the extremal characteristic on the requested side (k is the curvature at
/// x_minus or x_plus, rho the exact Taylor remainder there). Converges to
/// correction_tol in the weighted norm; throws contraction_error with a
/// "t0 not negative enough" hint when the iteration expands.
CorrectionResult extremal_fixpoint(const PotentialModel& model,
                                   const WellPreparedData& data,
                                   const SampledFunction& phi, Side side,
                                   const AsymptoticParams& params);

/// Same construction for the interior characteristic with label K, whose
/// displacement carries the explicit K e^{-a t} term. K = 0 yields the
/// center correction Y0.
CorrectionResult interior_fixpoint(const PotentialModel& model,
                                   const WellPreparedData& data,
                                   const SampledFunction& phi, double K,
                                   const AsymptoticParams& params);

/// Exact Taylor remainders of H' at the launch states:
/// rho0 = H'(x0 + Y0) - H'(x0) - a Y0, rho_plus analogous with b at x_plus,
/// rho_k(t) = H'(X(t,K)) - H'(x0) - a (X(t,K) - x0).
struct RemainderSet {
    SampledFunction rho0;
    SampledFunction rho_plus;
    std::vector<SampledFunction> rho_k;
};

RemainderSet remainders(const PotentialModel& model, const WellPreparedData& data,
                        const SampledFunction& Y0, const SampledFunction& Yplus,
                        std::span<const SampledFunction> YK,
                        std::span<const double> K);

/// Forcing of the resolvent equation, assembled from the remainders with the
/// two smoothing convolutions and the Q'-weighted K-quadrature.
/// bound_constant reports sup |W(t)| e^{-2(-a+delta) t} over the grid;
/// fitted_rate is the log-linear decay rate of |W|.
struct WResult {
    SampledFunction W;
    double bound_constant = 0.0;
    double fitted_rate = 0.0;
};

WResult assemble_W(const WellPreparedData& data, const RemainderSet& rem,
                   const KGrid& kgrid, double delta);

/// Outcome of the self-consistent force construction on (-inf, t0].
struct FixpointState {
    SampledFunction phi;
    int iterations = 0;
    std::vector<double> diffs; // successive weighted-norm differences
    double ratio = 0.0;        // contraction ratio estimate
    double residual = 0.0;     // weighted norm of L phi - W(phi) at the end
    double phi_norm = 0.0;     // weighted class norm of phi
    bool phi_class_ok = true;  // phi_norm <= class_bound_M
    double w_bound_constant = 0.0;
    double w_fitted_rate = 0.0;
    LaunchGrid grid;
};

/// Iterates phi_{n+1} = G * W(phi_n) from phi_0 = 0 until the weighted-norm
/// difference drops below phi_tol. Throws contraction_error ("contraction
/// failed", suggesting a smaller t0) when the ratio reaches 1, or ("class
/// escape") when the class bound is left.
FixpointState solve_phi(const PotentialModel& model, const WellPreparedData& data,
                        const AsymptoticParams& params);

struct LaunchProfile {
    SampledFunction Y0;
    SampledFunction Yplus;
    SampledFunction Yminus;
    std::vector<double> yk_at_t0; // interior corrections at the seed time
    std::vector<double> r_frozen; // m Q(K)
    bool y0_class_ok = true;
    bool yplus_class_ok = true;
    int clamped_nodes = 0;
};

struct SeedResult {
    LaunchProfile profile;
    CharacteristicEnsemble ensemble;
};

/// Materializes the ensemble at t = t0: X(t0,K) = x0 + K e^{-a t0} + Y(K,t0),
/// extremal positions from the side corrections, frozen transported values
/// m Q(K), Jacobians from centered differences in K. Interior nodes are
/// clamped into (x_minus + eps, x_plus - eps) with events counted; a broken
/// K-ordering throws ordering_error.
SeedResult seed_ensemble(const PotentialModel& model, const WellPreparedData& data,
                         const AsymptoticParams& params, const SampledFunction& phi);

} // namespace splitdyn
