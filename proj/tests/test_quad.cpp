#include <doctest.h>

#include "splitdyn/errors.hpp"
#include "splitdyn/quad.hpp"
#include "splitdyn/sampled.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace splitdyn;

TEST_CASE("bisection finds monotone roots to tight tolerance") {
    auto f = [](double x) { return x * x * x - 2.0; };
    const double r = bisect(f, 0.0, 2.0, 0.0, 1e-14);
    CHECK(std::abs(r - std::cbrt(2.0)) < 1e-12);

    CHECK_THROWS_AS(bisect(f, 2.0, 3.0, 0.0), numeric_error);
}

TEST_CASE("cumulative simpson integrates smooth functions at fourth order") {
    const double dt = 1e-2;
    const std::size_t n = 1001;
    std::vector<double> v(n), out(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(0.7 * (double(i) * dt));
    cumulative_simpson(v, dt, out);
    for (std::size_t i : {100ul, 501ul, 1000ul}) {
        const double exact = (std::exp(0.7 * double(i) * dt) - 1.0) / 0.7;
        CHECK(std::abs(out[i] - exact) / exact < 1e-9);
    }
}

TEST_CASE("adaptive simpson reaches requested tolerance") {
    const double val =
        adaptive_simpson([](double x) { return std::sin(x) * std::exp(-x); }, 0.0,
                         10.0, 1e-13);
    const double exact = 0.5 * (1.0 - std::exp(-10.0) * (std::sin(10.0) + std::cos(10.0)));
    CHECK(std::abs(val - exact) < 1e-12);
}

TEST_CASE("gauss-hermite grid: moments, symmetry, zero node") {
    for (int n : {33, 65, 129}) {
        const KGrid g = gauss_hermite(n);
        REQUIRE(g.size() == static_cast<std::size_t>(n));
        // exact symmetry
        for (int i = 0; i < n / 2; ++i) {
            CHECK(g.nodes[i] == -g.nodes[n - 1 - i]);
            CHECK(g.weights[i] == g.weights[n - 1 - i]);
        }
        CHECK(g.nodes[n / 2] == 0.0);

        const double sqrt_pi = std::sqrt(std::numbers::pi);
        double s0 = 0, s2 = 0, s4 = 0;
        for (int i = 0; i < n; ++i) {
            s0 += g.weights[i];
            s2 += g.weights[i] * g.nodes[i] * g.nodes[i];
            s4 += g.weights[i] * std::pow(g.nodes[i], 4);
        }
        CHECK(std::abs(s0 - sqrt_pi) < 1e-13);
        CHECK(std::abs(s2 - 0.5 * sqrt_pi) < 1e-12);
        CHECK(std::abs(s4 - 0.75 * sqrt_pi) < 1e-12);
    }
}

TEST_CASE("paired sum cancels antisymmetric integrands exactly") {
    const KGrid g = gauss_hermite(65);
    std::vector<double> terms(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        terms[i] = g.weights[i] * std::sin(g.nodes[i]); // odd in K
    CHECK(paired_sum(terms) == 0.0);
}

TEST_CASE("exp_convolve matches the closed form for exponentials") {
    // U_k[e^{r t}](t) = e^{r t} / (r + k)
    for (double k : {-0.5, 0.9}) {
        const double r = 1.7;
        SampledFunction f = sample_on(-40.0, 0.0, 1e-3,
                                      [&](double t) { return std::exp(r * t); },
                                      {1.0, r});
        const SampledFunction u = exp_convolve(f, k);
        double worst = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double exact = std::exp(r * u.t_at(i)) / (r + k);
            worst = std::max(worst, std::abs(u.values[i] - exact) / exact);
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("exp_convolve requires an integrable tail") {
    SampledFunction f = sample_on(-10.0, 0.0, 1e-2,
                                  [](double t) { return std::exp(0.2 * t); },
                                  {1.0, 0.2});
    CHECK_THROWS_AS(exp_convolve(f, -0.5), numeric_error);
}
