#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace splitdyn {

/// Analytic continuation left of the grid: f(t) ~ coef * e^{rate * t} for
/// t <= t_left. rate must be positive for anything that decays toward -inf.
struct ExponentialTail {
    double coef = 0.0;
    double rate = 1.0;
};

/// Uniformly sampled function on [t_left, t_left + (n-1) dt] with an
/// exponential tail descriptor for the semi-infinite part.
struct SampledFunction {
    double t_left = 0.0;
    double dt = 1.0;
    std::vector<double> values;
    ExponentialTail tail;

    std::size_t size() const { return values.size(); }
    double t_at(std::size_t i) const { return t_left + static_cast<double>(i) * dt; }
    double t_right() const { return values.empty() ? t_left : t_at(values.size() - 1); }

    static SampledFunction zeros_like(const SampledFunction& f) {
        SampledFunction g;
        g.t_left = f.t_left;
        g.dt = f.dt;
        g.values.assign(f.values.size(), 0.0);
        g.tail = ExponentialTail{0.0, f.tail.rate};
        return g;
    }
};

/// Builds a grid on [t_left, t0] with exactly round((t0-t_left)/dt) steps and
/// samples fn on it.
SampledFunction sample_on(double t_left, double t0, double dt,
                          const std::function<double(double)>& fn,
                          ExponentialTail tail);

/// U_k f (t) = ∫_{-infty}^{t} e^{-k (t - z)} f(z) dz on the grid of f.
/// Semi-infinite part from the tail descriptor in closed form (requires
/// tail.rate + k > 0 when tail.coef != 0); gridded part by cumulative
/// composite Simpson. The result's tail is (coef/(k+rate), rate).
SampledFunction exp_convolve(const SampledFunction& f, double k);

/// Running integral ∫_{-infty}^{t} f(z) dz (requires tail.rate > 0 when the
/// tail coefficient is nonzero).
SampledFunction integrate_left(const SampledFunction& f);

/// sup over grid points of |f(t)| e^{weight_rate * t}.
double weighted_sup_norm(const SampledFunction& f, double weight_rate);

/// Least-squares slope of log|f| against t over grid points with
/// |f| > floor; used for decay-rate fits.
double log_slope(const SampledFunction& f, double floor = 1e-300);

} // namespace splitdyn
