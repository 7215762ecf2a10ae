#pragma once

#include "splitdyn/sampled.hpp"

#include <complex>

namespace splitdyn {

/// Kernels of the memory operator L f = f - m K0*f - (1-m) K+*f with
/// K0(t) = a e^{-a t} 1[t>=0], K+(t) = b e^{-b t} 1[t>=0].
/// Construction enforces the stability inequality (1-m)a + mb > 0.
struct ConvolutionKernels {
    double a; // curvature at the unstable state, < 0
    double b; // curvature at the stable state, > 0
    double m; // mass fraction at the unstable state, in (0,1]

    ConvolutionKernels(double a_, double b_, double m_);
};

/// Characteristic function C(theta) = 1 - m a/(a+theta) - (1-m) b/(b+theta).
/// Throws numeric_error at the poles theta = -a, -b. Roots: 0 and
/// -((1-m)a + mb).
double charfn(const ConvolutionKernels& k, double theta);
std::complex<double> charfn(const ConvolutionKernels& k, std::complex<double> theta);

/// Explicit inverse kernel: G = delta_0 + G_r on [0, inf) with
/// G_r(x) = res_c1 + res_c2 e^{theta2 x}. Residues from the Heaviside
/// formula applied to the two-pole transform B(theta)/P(theta),
/// B(theta) = theta (m a + (1-m) b) + a b, P(theta) = theta (theta - theta2).
struct GreenFunction {
    ConvolutionKernels kernels;
    double theta2;  // decay root, < 0 under stability
    double res_c1;  // residue at 0
    double res_c2;  // residue at theta2
    bool c1_anomaly; // |res_c1| < 1e-12 (flagged, never asserted away)

    double g_r(double x) const; // 0 for x < 0
};

GreenFunction build_green(const ConvolutionKernels& k);

/// L phi (t) = phi(t) - m a U_a[phi](t) - (1-m) b U_b[phi](t), with
/// U_k[phi](t) = ∫_{-inf}^t e^{-k(t-z)} phi(z) dz. phi must carry a tail
/// descriptor integrable against both kernels.
SampledFunction apply_L(const ConvolutionKernels& k, const SampledFunction& phi);

/// Solves L phi = W through the explicit kernel:
/// phi(t) = W(t) + ∫_{-inf}^t G_r(t - eta) W(eta) d eta
/// (the delta part applied analytically).
SampledFunction invert_via_green(const GreenFunction& g, const SampledFunction& W);

/// Quadrature check that L G_r reproduces m a e^{-a x} + (1-m) b e^{-b x} on
/// [0, x_max]: returns the sup of |error| / max(1, |target|) over a uniform
/// sample of n points, each integral by adaptive Simpson.
double verify_green(const GreenFunction& g, double x_max = 20.0, int n = 81);

} // namespace splitdyn
