#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace splitdyn {

/// Double-well free energy with user-supplied derivative evaluators.
///
/// The admissibility assumptions are: H'(x) = alpha*x + g(x) with g and H''
/// bounded, and a single spinodal interval (x_lo, x_hi) where H'' < 0, with
/// H'' >= 0 outside. `validate` checks both against the declared bounds on a
/// probe grid.
struct PotentialModel {
    std::function<double(double)> H;
    std::function<double(double)> H1; // H'
    std::function<double(double)> H2; // H''
    std::function<double(double)> H3; // H'''
    std::function<double(double)> H4; // H''''
    double alpha = 1.0;
    double g_bound = 0.0;   // sup |H'(x) - alpha x|
    double h2_bound = 0.0;  // sup |H''|
    std::string family = "custom";
    std::map<std::string, double> params;
};

/// Built-in reference family H'(x) = alpha*x - beta*tanh(gamma*x).
/// Satisfies the boundedness assumption exactly (|g| <= beta,
/// |H''| <= alpha + beta*gamma); has a spinodal interval iff beta*gamma > alpha.
PotentialModel reference_potential(double alpha = 1.0, double beta = 2.0,
                                   double gamma = 1.0);

/// Named potential lookup used by the run configuration. "reference" is
/// built in; custom families can be registered programmatically.
void register_potential(const std::string& name,
                        std::function<PotentialModel(const std::map<std::string, double>&)> factory);
PotentialModel make_potential(const std::string& name,
                              const std::map<std::string, double>& params);

struct ProbeGrid {
    double lo = -50.0;
    double hi = 50.0;
    double step = 1e-2;
};

/// Empty result means the model passes the shape and boundedness assumptions
/// on the probe grid; otherwise each string names the violated assumption and
/// a witness point.
std::vector<std::string> validate(const PotentialModel& model,
                                  const ProbeGrid& grid = {});

/// Spinodal landmarks: H''(x_star_minus) = H''(x_star_plus) = 0,
/// H'(x_star_minus) = H'(x_2star_plus) = sigma_star_plus and mirrored.
struct SpinodalChart {
    double x_star_minus = 0.0;   // left spinodal point (< 0)
    double x_star_plus = 0.0;    // right spinodal point (> 0)
    double x_2star_minus = 0.0;  // left outer state matching sigma_star_minus
    double x_2star_plus = 0.0;   // right outer state matching sigma_star_plus
    double sigma_star_minus = 0.0;
    double sigma_star_plus = 0.0;
};

SpinodalChart spinodal_chart(const PotentialModel& model);

enum class Branch { minus, zero, plus };

/// Inverse of H' restricted to one monotone branch: returns x with
/// H'(x) = sigma, |residual| <= 1e-12. Throws numeric_error outside the
/// branch domain.
double branch_solve(const PotentialModel& model, const SpinodalChart& chart,
                    double sigma, Branch branch);

/// Launch data: mass m at the spinodal state x0, mass 1-m at the stable
/// state x_plus, equal slopes sigma0, first moment ell_star, and the
/// curvatures a = H''(x0) < 0, b = H''(x_plus) > 0.
struct WellPreparedData {
    double m = 1.0;
    double x0 = 0.0;
    double x_plus = 0.0;
    double x_minus = 0.0;
    double sigma0 = 0.0;
    double a = 0.0;
    double b = 0.0;
    double ell_star = 0.0;
};

struct Anchor {
    enum class Kind { sigma0, ell_star } kind;
    double value;
    static Anchor sigma0(double v) { return {Kind::sigma0, v}; }
    static Anchor ell_star(double v) { return {Kind::ell_star, v}; }
};

/// Resolves the anchor to (x0, x_plus, x_minus, sigma0, ell_star), evaluates
/// the curvatures and enforces the stability inequality (1-m)a + mb > 0;
/// throws stability_error when it fails.
WellPreparedData prepare(const PotentialModel& model, const SpinodalChart& chart,
                         double m, Anchor anchor);

/// Leading behavior of the inverse branches near the upper spinodal force:
/// the center/left branches open like a square root with coefficients
/// determined by the Taylor constants of delta_sigma = c1 A^2 + c2 A^3 + ...
/// (c1 = -H'''(x_star_minus)/2 > 0, c2 = -H''''(x_star_minus)/6), while the
/// right branch is linear with slope -b_lin in delta_sigma.
struct BranchExpansion {
    double c = 0.0;        // sqrt(2/|H'''(x_star_minus)|)
    double a1_zero = 0.0;  // = c
    double a1_minus = 0.0; // = -c
    double a2 = 0.0;       // shared linear coefficient, -c2/(2 c1^2)
    double b_lin = 0.0;    // 1/H''(x_2star_plus)
    double taylor_c1 = 0.0;
    double taylor_c2 = 0.0;

    /// Two-term predictions of the inverse branches for sigma near the upper
    /// spinodal force (delta_sigma = sigma_star_plus - sigma >= 0).
    std::function<double(double)> predict_zero;
    std::function<double(double)> predict_minus;
    std::function<double(double)> predict_plus;
};

/// Throws numeric_error("degenerate spinodal: ...") when |H'''(x_star_minus)|
/// is below 1e-8 (the flat-spinodal regime where the square-root expansion
/// degenerates to a cube root).
BranchExpansion branch_expansion(const PotentialModel& model,
                                 const SpinodalChart& chart);

} // namespace splitdyn
