#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace splitdyn {

/// Bisection for a strictly monotone f on [lo, hi] with f(x*) = target.
/// Returns the root; the bracket must be valid. Tolerance is on |f - target|
/// with a floor on the interval width at machine resolution.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double target, double ftol = 1e-12, int max_iter = 200);

/// Expands [lo, hi] geometrically in `dir` (+1 right, -1 left) until
/// f crosses `target`, then bisects. Throws numeric_error on failure.
double bisect_expand(const std::function<double(double)>& f, double start,
                     double dir, double target, double ftol = 1e-12);

/// Running integral of uniformly sampled values: out[i] = ∫_{t_0}^{t_i} f.
/// Composite Simpson at even indices; odd indices get the integral of the
/// local quadratic through the surrounding three nodes.
void cumulative_simpson(std::span<const double> values, double dt,
                        std::span<double> out);

/// Adaptive Simpson of f on [a, b] to absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-12, int max_depth = 40);

/// Gauss-Hermite nodes and weights for the weight e^{-K^2}: sum w_i f(K_i)
/// approximates ∫ f(K) e^{-K^2} dK. Nodes ascend; for odd n the center node
/// is exactly 0 and the set is exactly symmetric (K_i = -K_{n-1-i},
/// w_i = w_{n-1-i}), so antisymmetric integrands reduce to exact zero under
/// paired summation.
struct KGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

KGrid gauss_hermite(int n);

/// Sum of w[i]*f(K[i]) taken pairwise from the outside in: (first + last),
/// (second + second-to-last), ..., center. Exact cancellation for
/// antisymmetric integrands on a symmetric grid; the fixed order keeps
/// results schedule-independent.
double paired_sum(std::span<const double> terms);

} // namespace splitdyn
