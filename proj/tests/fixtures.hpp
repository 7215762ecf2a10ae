#pragma once

#include "splitdyn/longtime.hpp"
#include "splitdyn/transport.hpp"
#include "splitdyn/wellposed.hpp"

namespace testfix {

using namespace splitdyn;

inline const PotentialModel& ref() {
    static PotentialModel m = reference_potential();
    return m;
}

inline const SpinodalChart& chart() {
    static SpinodalChart c = spinodal_chart(ref());
    return c;
}

inline const WellPreparedData& generic_data() {
    static WellPreparedData d = prepare(ref(), chart(), 0.6, Anchor::sigma0(0.2));
    return d;
}

inline AsymptoticParams short_params() {
    AsymptoticParams p;
    p.t0 = -8.0;
    p.dt = 1e-2;
    p.node_count = 65;
    return p;
}

inline const CharacteristicEnsemble& generic_seed() {
    static CharacteristicEnsemble e = [] {
        const FixpointState st = solve_phi(ref(), generic_data(), short_params());
        return seed_ensemble(ref(), generic_data(), short_params(), st.phi).ensemble;
    }();
    return e;
}

// one shared medium-horizon run: t0=-8 to t=32 covers launch, splitting and
// enough settled tail for the equilibrium drift window
inline const TimeSeries& generic_series() {
    static TimeSeries ts =
        run(generic_seed(), ref(), chart(), 32.0, 1e-3, 10);
    return ts;
}

} // namespace testfix
