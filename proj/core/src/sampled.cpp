#include "splitdyn/sampled.hpp"
#include "splitdyn/errors.hpp"
#include "splitdyn/quad.hpp"

#include <cmath>

namespace splitdyn {

SampledFunction sample_on(double t_left, double t0, double dt,
                          const std::function<double(double)>& fn,
                          ExponentialTail tail) {
    if (dt <= 0.0 || t0 < t_left)
        throw numeric_error("sample_on: invalid grid specification");
    const auto n = static_cast<std::size_t>(std::llround((t0 - t_left) / dt)) + 1;
    SampledFunction f;
    f.t_left = t_left;
    f.dt = dt;
    f.tail = tail;
    f.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.values[i] = fn(f.t_at(i));
    return f;
}

SampledFunction exp_convolve(const SampledFunction& f, double k) {
    const std::size_t n = f.size();
    SampledFunction out = SampledFunction::zeros_like(f);
    if (n == 0) return out;

    // tail contribution at t_left: ∫_{-inf}^{t_left} e^{-k(t_left - z)} c e^{r z} dz
    double tail_at_left = 0.0;
    if (f.tail.coef != 0.0) {
        if (f.tail.rate + k <= 0.0)
            throw numeric_error("tail descriptor required: non-integrable tail "
                                "against kernel rate");
        tail_at_left = f.tail.coef * std::exp(f.tail.rate * f.t_left) / (f.tail.rate + k);
    }

    // gridded part: U(t_i) = e^{-k (t_i - t_left)} [ tail + S_i ],
    // S_i = ∫_{t_left}^{t_i} e^{k (z - t_left)} f(z) dz
    std::vector<double> g(n), s(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(k * (f.t_at(i) - f.t_left)) * f.values[i];
    cumulative_simpson(g, f.dt, s);
    for (std::size_t i = 0; i < n; ++i)
        out.values[i] = std::exp(-k * (f.t_at(i) - f.t_left)) * (tail_at_left + s[i]);

    out.tail.rate = f.tail.rate;
    out.tail.coef = (f.tail.coef != 0.0) ? f.tail.coef / (f.tail.rate + k) : 0.0;
    return out;
}

SampledFunction integrate_left(const SampledFunction& f) {
    const std::size_t n = f.size();
    SampledFunction out = SampledFunction::zeros_like(f);
    if (n == 0) return out;
    double tail_at_left = 0.0;
    if (f.tail.coef != 0.0) {
        if (f.tail.rate <= 0.0)
            throw numeric_error("tail descriptor required: non-integrable tail");
        tail_at_left = f.tail.coef * std::exp(f.tail.rate * f.t_left) / f.tail.rate;
    }
    std::vector<double> s(n);
    cumulative_simpson(f.values, f.dt, s);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = tail_at_left + s[i];
    out.tail.rate = f.tail.rate;
    out.tail.coef = (f.tail.coef != 0.0) ? f.tail.coef / f.tail.rate : 0.0;
    return out;
}

double weighted_sup_norm(const SampledFunction& f, double weight_rate) {
    double sup = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double v = std::abs(f.values[i]) * std::exp(weight_rate * f.t_at(i));
        if (v > sup) sup = v;
    }
    return sup;
}

double log_slope(const SampledFunction& f, double floor) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = std::abs(f.values[i]);
        if (a <= floor) continue;
        const double t = f.t_at(i);
        const double y = std::log(a);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++m;
    }
    if (m < 2) throw numeric_error("log_slope: not enough points above floor");
    const double denom = static_cast<double>(m) * stt - st * st;
    return (static_cast<double>(m) * sty - st * sy) / denom;
}

} // namespace splitdyn
