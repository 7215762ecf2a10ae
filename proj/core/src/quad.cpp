#include "splitdyn/quad.hpp"
#include "splitdyn/errors.hpp"

#include <cmath>
#include <limits>

namespace splitdyn {

double bisect(const std::function<double(double)>& f, double lo, double hi,
              double target, double ftol, int max_iter) {
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (!std::isfinite(flo) || !std::isfinite(fhi))
        throw numeric_error("evaluation failure in bisection bracket");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw numeric_error("bisection bracket does not straddle the target");
    double mid = lo;
    for (int it = 0; it < max_iter; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (!std::isfinite(fm))
            throw numeric_error("evaluation failure during bisection");
        if (fm == 0.0 || std::abs(fm) <= ftol ||
            (hi - lo) <= std::numeric_limits<double>::epsilon() *
                             (std::abs(lo) + std::abs(hi)))
            return mid;
        if ((fm > 0) == (fhi > 0)) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return mid;
}

double bisect_expand(const std::function<double(double)>& f, double start,
                     double dir, double target, double ftol) {
    double lo = start;
    double step = 1.0;
    double far = start;
    const double fs = f(start) - target;
    for (int k = 0; k < 80; ++k) {
        far = start + dir * step;
        const double ff = f(far) - target;
        if (!std::isfinite(ff))
            throw numeric_error("evaluation failure while expanding bracket");
        if ((ff > 0) != (fs > 0) || ff == 0.0) {
            if (dir > 0) return bisect(f, lo, far, target, ftol);
            return bisect(f, far, lo, target, ftol);
        }
        step *= 2.0;
    }
    throw numeric_error("no bracket found while expanding search interval");
}

void cumulative_simpson(std::span<const double> v, double dt,
                        std::span<double> out) {
    const std::size_t n = v.size();
    if (out.size() != n) throw numeric_error("cumulative_simpson size mismatch");
    if (n == 0) return;
    out[0] = 0.0;
    if (n == 1) return;
    if (n == 2) {
        out[1] = 0.5 * dt * (v[0] + v[1]);
        return;
    }
    // even indices: composite Simpson chain
    for (std::size_t i = 2; i < n; i += 2)
        out[i] = out[i - 2] + dt / 3.0 * (v[i - 2] + 4.0 * v[i - 1] + v[i]);
    // odd indices: quadratic through (i-1, i, i+1) integrated over [t_{i-1}, t_i]
    for (std::size_t i = 1; i < n; i += 2) {
        if (i + 1 < n)
            out[i] = out[i - 1] + dt / 12.0 * (5.0 * v[i - 1] + 8.0 * v[i] - v[i + 1]);
        else
            out[i] = out[i - 1] + dt / 12.0 * (-v[i - 2] + 8.0 * v[i - 1] + 5.0 * v[i]);
    }
}

namespace {

double simpson_panel(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double b, double fa, double fb, double fm, double whole,
                     double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_panel(a, fa, m, fm, flm);
    const double right = simpson_panel(m, fm, b, fb, frm);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_step(f, a, m, fa, fm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_step(f, m, b, fm, fb, frm, right, 0.5 * tol, depth - 1);
}

} // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = simpson_panel(a, fa, b, fb, fm);
    return adaptive_step(f, a, b, fa, fb, fm, whole, tol, max_depth);
}

KGrid gauss_hermite(int n) {
    if (n < 1) throw numeric_error("gauss_hermite: n must be positive");
    KGrid g;
    g.nodes.assign(static_cast<std::size_t>(n), 0.0);
    g.weights.assign(static_cast<std::size_t>(n), 0.0);

    const double sqrt_pi = std::sqrt(M_PI);
    const int half = (n + 1) / 2;
    // Newton on the orthonormal-scaled recurrence; initial guesses per
    // Stroud & Secrest. Finds the upper half, mirrors the rest.
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0)
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1)
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        else if (i == 2)
            z = 1.86 * z - 0.86 * g.nodes[static_cast<std::size_t>(n - 1)];
        else if (i == 3)
            z = 1.91 * z - 0.91 * g.nodes[static_cast<std::size_t>(n - 2)];
        else
            z = 2.0 * z - g.nodes[static_cast<std::size_t>(n - i + 1)];

        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = std::pow(M_PI, -0.25);
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) <= 1e-15 * (1.0 + std::abs(z))) break;
        }
        const std::size_t hi_idx = static_cast<std::size_t>(n - 1 - i);
        const std::size_t lo_idx = static_cast<std::size_t>(i);
        g.nodes[hi_idx] = z;
        g.nodes[lo_idx] = -z;
        g.weights[hi_idx] = 2.0 / (pp * pp);
        g.weights[lo_idx] = g.weights[hi_idx];
    }
    if (n % 2 == 1) g.nodes[static_cast<std::size_t>(n / 2)] = 0.0;

    // normalize total weight to sqrt(pi) exactly at the summation level
    double sum = 0.0;
    for (int i = 0, j = n - 1; i < j; ++i, --j) sum += g.weights[i] + g.weights[j];
    if (n % 2 == 1) sum += g.weights[static_cast<std::size_t>(n / 2)];
    const double scale = sqrt_pi / sum;
    for (auto& w : g.weights) w *= scale;
    return g;
}

double paired_sum(std::span<const double> terms) {
    const std::size_t n = terms.size();
    double s = 0.0;
    std::size_t i = 0, j = n;
    while (i + 1 < j) {
        --j;
        s += terms[i] + terms[j];
        ++i;
    }
    if (i < j) s += terms[i];
    return s;
}

} // namespace splitdyn
