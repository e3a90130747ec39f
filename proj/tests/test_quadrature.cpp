/// @file test_quadrature.cpp
/// @brief Gauss-Legendre rules, composite drivers, and compensated sums.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nilab/quadrature.hpp"
#include "nilab/rng.hpp"
#include "nilab/summation.hpp"

using namespace nilab;

TEST_CASE("Gauss-Legendre weights sum to the interval length") {
    for (int n : {1, 2, 5, 8, 16, 32}) {
        const auto& rule = GaussLegendre::get(n);
        double w = 0.0;
        for (double x : rule.weights) w += x;
        REQUIRE(std::abs(w - 2.0) < 1e-14);
    }
}

TEST_CASE("n-point rule is exact for polynomials of degree 2n-1") {
    // int_{-1}^{1} x^8 dx = 2/9 needs n >= 5.
    auto f = [](double x) { return std::pow(x, 8); };
    REQUIRE(std::abs(gl_integrate(f, -1.0, 1.0, 5) - 2.0 / 9.0) < 1e-15);
    REQUIRE(std::abs(gl_integrate(f, -1.0, 1.0, 16) - 2.0 / 9.0) < 1e-15);
}

TEST_CASE("composite rule handles smooth integrands") {
    auto f = [](double x) { return std::exp(x); };
    const double exact = std::exp(1.0) - 1.0;
    REQUIRE(std::abs(gl_composite(f, 0.0, 1.0, 8, 0.25) - exact) < 1e-14);
}

TEST_CASE("breakpoint-aware driver resolves kinks exactly") {
    auto f = [](double x) { return std::abs(x); };
    // Low order on purpose: the split at 0 must carry all the accuracy.
    const double got = gl_piecewise(f, -1.0, 2.0, {0.0}, 2, 10.0);
    REQUIRE(std::abs(got - 2.5) < 1e-14);
}

TEST_CASE("oscillatory integrand with wavelength-matched panels") {
    const double omega = 50.0;
    auto f = [&](double x) { return std::cos(omega * x); };
    const double exact = std::sin(omega * 10.0) / omega;
    // Two cycles per panel at 16 nodes.
    const double width = 2.0 * kTwoPi / omega;
    REQUIRE(std::abs(gl_composite(f, 0.0, 10.0, 16, width) - exact) < 1e-12);
}

TEST_CASE("geometric breakpoints cover the far field") {
    auto breaks = geometric_breaks(1.0, 100.0, 2.0);
    REQUIRE(breaks.size() == 7);
    REQUIRE(breaks.front() == 1.0);
    REQUIRE(breaks.back() == 64.0);
}

TEST_CASE("compensated summation survives catastrophic cancellation") {
    KahanSum acc;
    acc.add(1e16);
    for (int i = 0; i < 1000; ++i) acc.add(1e-3);
    acc.add(-1e16);
    REQUIRE(std::abs(acc.value() - 1.0) < 1e-12);
}

TEST_CASE("pairwise and descending-magnitude sums agree with exact values") {
    std::vector<double> v(4096, 0.1);
    REQUIRE(std::abs(pairwise_sum(v) - 409.6) < 1e-10);
    std::vector<double> w = {1e15, 3.0, -1e15, 4.0};
    REQUIRE(sum_descending_magnitude(w) == 7.0);
}

TEST_CASE("splitmix64 sequence is pinned") {
    SplitMix64 rng(42);
    REQUIRE(rng.next_u64() == 13679457532755275413ull);
    double u = rng.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    for (int i = 0; i < 100; ++i) {
        auto r = rng.next_below(7);
        REQUIRE(r < 7);
    }
}
