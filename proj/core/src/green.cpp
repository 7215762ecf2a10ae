#include "splitdyn/green.hpp"
#include "splitdyn/errors.hpp"
#include "splitdyn/quad.hpp"

#include <cmath>
#include <sstream>

namespace splitdyn {

ConvolutionKernels::ConvolutionKernels(double a_, double b_, double m_)
    : a(a_), b(b_), m(m_) {
    if (!(a < 0.0)) throw numeric_error("kernel curvature a must be negative");
    if (!(b > 0.0)) throw numeric_error("kernel curvature b must be positive");
    if (!(m > 0.0) || m > 1.0) throw numeric_error("kernel mass m must be in (0,1]");
    const double s = (1.0 - m) * a + m * b;
    if (!(s > 0.0)) {
        std::ostringstream os;
        os << "stability violated: (1-m)a+mb = " << s << " <= 0";
        throw stability_error(os.str());
    }
}

double charfn(const ConvolutionKernels& k, double theta) {
    if (theta == -k.a || theta == -k.b)
        throw numeric_error("pole of C");
    return 1.0 - k.m * k.a / (k.a + theta) - (1.0 - k.m) * k.b / (k.b + theta);
}

std::complex<double> charfn(const ConvolutionKernels& k, std::complex<double> theta) {
    if (theta == std::complex<double>(-k.a) || theta == std::complex<double>(-k.b))
        throw numeric_error("pole of C");
    return 1.0 - k.m * k.a / (k.a + theta) - (1.0 - k.m) * k.b / (k.b + theta);
}

double GreenFunction::g_r(double x) const {
    if (x < 0.0) return 0.0;
    return res_c1 + res_c2 * std::exp(theta2 * x);
}

GreenFunction build_green(const ConvolutionKernels& k) {
    const double theta2 = -((1.0 - k.m) * k.a + k.m * k.b);
    auto B = [&](double th) { return th * (k.m * k.a + (1.0 - k.m) * k.b) + k.a * k.b; };
    // P(theta) = theta (theta - theta2), P'(0) = -theta2, P'(theta2) = theta2
    const double c1 = B(0.0) / (-theta2);
    const double c2 = B(theta2) / theta2;
    return GreenFunction{k, theta2, c1, c2, std::abs(c1) < 1e-12};
}

SampledFunction apply_L(const ConvolutionKernels& k, const SampledFunction& phi) {
    const SampledFunction ua = exp_convolve(phi, k.a);
    const SampledFunction ub = exp_convolve(phi, k.b);
    SampledFunction out = SampledFunction::zeros_like(phi);
    for (std::size_t i = 0; i < phi.size(); ++i)
        out.values[i] = phi.values[i] - k.m * k.a * ua.values[i] -
                        (1.0 - k.m) * k.b * ub.values[i];
    out.tail.rate = phi.tail.rate;
    out.tail.coef = phi.tail.coef - k.m * k.a * ua.tail.coef -
                    (1.0 - k.m) * k.b * ub.tail.coef;
    return out;
}

SampledFunction invert_via_green(const GreenFunction& g, const SampledFunction& W) {
    if (W.tail.coef != 0.0 && W.tail.rate <= 0.0)
        throw numeric_error("non-integrable tail");
    // ∫ G_r(t-eta) W(eta) d eta = res_c1 ∫ W + res_c2 ∫ e^{theta2 (t-eta)} W
    const SampledFunction iw = integrate_left(W);
    const SampledFunction cw = exp_convolve(W, -g.theta2);
    SampledFunction phi = SampledFunction::zeros_like(W);
    for (std::size_t i = 0; i < W.size(); ++i)
        phi.values[i] = W.values[i] + g.res_c1 * iw.values[i] + g.res_c2 * cw.values[i];
    phi.tail.rate = W.tail.rate;
    phi.tail.coef = W.tail.coef + g.res_c1 * iw.tail.coef + g.res_c2 * cw.tail.coef;
    return phi;
}

double verify_green(const GreenFunction& g, double x_max, int n) {
    const ConvolutionKernels& k = g.kernels;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = x_max * (i + 1) / n;
        // L G_r (x) = G_r(x) - m a e^{-a x} I_a(x) - (1-m) b e^{-b x} I_b(x),
        // I_k(x) = ∫_0^x e^{k z} G_r(z) dz
        auto I = [&](double kk) {
            return adaptive_simpson(
                [&](double z) { return std::exp(kk * z) * g.g_r(z); }, 0.0, x,
                1e-13 * std::max(1.0, std::exp(std::max(0.0, kk * x))), 48);
        };
        const double lhs = g.g_r(x) - k.m * k.a * std::exp(-k.a * x) * I(k.a) -
                           (1.0 - k.m) * k.b * std::exp(-k.b * x) * I(k.b);
        const double target =
            k.m * k.a * std::exp(-k.a * x) + (1.0 - k.m) * k.b * std::exp(-k.b * x);
        const double err = std::abs(lhs - target) / std::max(1.0, std::abs(target));
        if (err > worst) worst = err;
    }
    return worst;
}

} // namespace splitdyn
