#pragma once

#include <vector>

namespace splitdyn {

enum class Side { minus, plus };

/// Discrete state of the transported measure: interior characteristics at
/// Gauss-Hermite K-nodes, the two extremal characteristics, and a point mass
/// of weight 1-m riding the upper extremal. The transported value at node i
/// is frozen at R[i] = m Q(K[i]) for all time; lnJ tracks log dX/dK along
/// each characteristic (variational form, so the reconstructed density
/// m Q'(K) / (dX/dK) stays meaningful after the peaks separate).
struct CharacteristicEnsemble {
    double t = 0.0;
    double m = 1.0;
    std::vector<double> K;
    std::vector<double> w;   // Gauss-Hermite weights for e^{-K^2}
    std::vector<double> X;
    std::vector<double> lnJ;
    std::vector<double> R;   // frozen m Q(K)
    double x_minus = 0.0;    // extremal characteristics
    double x_plus = 0.0;

    std::size_t size() const { return X.size(); }
};

} // namespace splitdyn
