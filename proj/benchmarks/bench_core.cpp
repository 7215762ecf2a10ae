#include <benchmark/benchmark.h>

#include "splitdyn/green.hpp"
#include "splitdyn/potential.hpp"
#include "splitdyn/quad.hpp"
#include "splitdyn/transport.hpp"
#include "splitdyn/wellposed.hpp"

#include <cmath>

using namespace splitdyn;

namespace {

const PotentialModel& ref() {
    static PotentialModel m = reference_potential();
    return m;
}

const SpinodalChart& chart() {
    static SpinodalChart c = spinodal_chart(ref());
    return c;
}

const CharacteristicEnsemble& seed129() {
    static CharacteristicEnsemble e = [] {
        const WellPreparedData d = prepare(ref(), chart(), 0.6, Anchor::sigma0(0.2));
        AsymptoticParams p;
        p.t0 = -10.0;
        p.dt = 1e-2;
        p.node_count = 129;
        const FixpointState st = solve_phi(ref(), d, p);
        return seed_ensemble(ref(), d, p, st.phi).ensemble;
    }();
    return e;
}

} // namespace

static void BM_GaussHermite(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(gauss_hermite(n));
}
BENCHMARK(BM_GaussHermite)->Arg(33)->Arg(129)->Arg(257);

static void BM_BranchSolve(benchmark::State& state) {
    double s = 0.01;
    for (auto _ : state) {
        benchmark::DoNotOptimize(branch_solve(ref(), chart(), s, Branch::plus));
        s = 0.01 + std::fmod(s + 0.07, 0.4);
    }
}
BENCHMARK(BM_BranchSolve);

static void BM_ApplyL(benchmark::State& state) {
    const ConvolutionKernels k{-0.5, 1.0, 0.8};
    const SampledFunction phi =
        sample_on(-40.0, 0.0, 1e-3, [](double t) { return std::exp(1.7 * t); },
                  {1.0, 1.7});
    for (auto _ : state) benchmark::DoNotOptimize(apply_L(k, phi));
}
BENCHMARK(BM_ApplyL);

static void BM_TransportStep(benchmark::State& state) {
    CharacteristicEnsemble e = seed129();
    for (auto _ : state) {
        step(e, ref(), 1e-3);
        benchmark::DoNotOptimize(e.X.data());
    }
}
BENCHMARK(BM_TransportStep);

static void BM_Functionals(benchmark::State& state) {
    const CharacteristicEnsemble& e = seed129();
    for (auto _ : state)
        benchmark::DoNotOptimize(functionals(e, ref(), chart()));
}
BENCHMARK(BM_Functionals);

BENCHMARK_MAIN();
