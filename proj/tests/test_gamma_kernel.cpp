/// @file test_gamma_kernel.cpp
/// @brief Kernel values frozen from the defining-integral oracle, then the
///        closed form against them, then structural properties.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "nilab/gamma_kernel.hpp"
#include "nilab/rng.hpp"

using namespace nilab;

namespace {

double rel_gap(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// 8 pi^3, 32 pi^3, (2 pi)^5: reference values frozen from the oracle before
// the closed form existed.
const double kPiCubed8 = 248.05021344239853;
const double kPiCubed32 = 992.20085376959413;
const double kTwoPiFifth = 9792.629913129005;

}  // namespace

// ============================================================================
// Oracle route (defining integral)
// ============================================================================

TEST_CASE("oracle reproduces the frozen triple values") {
    REQUIRE(rel_gap(gamma_oracle({-1.0, -1.0, 2.0}, 1e-6), kPiCubed8) < 1e-7);
    REQUIRE(rel_gap(gamma_oracle({1.0, 1.0, -2.0}, 1e-6), -kPiCubed8) < 1e-7);
    REQUIRE(rel_gap(gamma_oracle({-2.0, -2.0, 4.0}, 1e-6), kPiCubed32) < 1e-7);
}

TEST_CASE("oracle reproduces the frozen quintuple value") {
    REQUIRE(rel_gap(gamma_oracle({-1.0, -1.0, -1.0, -1.0, 4.0}, 1e-4), -kTwoPiFifth) <
            1e-7);
}

TEST_CASE("oracle vanishes on same-sign tuples") {
    REQUIRE(std::abs(gamma_oracle({0.5, 1.25, 3.0}, 1e-6)) < 1e-5);
    // All-ones triple: magnitude below 1e-6 of the unit-entry scale (2 pi)^3.
    const double unit_scale = kTwoPi * kTwoPi * kTwoPi;
    REQUIRE(std::abs(gamma_oracle({1.0, 1.0, 1.0}, 1e-7)) < 1e-6 * unit_scale);
}

TEST_CASE("oracle tracks the closed form at order two") {
    const std::vector<double> a = {-3.0, -3.0, -3.0, -3.0, 12.0};
    REQUIRE(rel_gap(gamma_oracle(a), gamma_closed(a)) < 1e-5);
}

TEST_CASE("explicit budgets are validated") {
    QuadratureSpec bad_cut;
    bad_cut.cutoff = 0.0;
    REQUIRE_THROWS_AS(gamma_oracle({-1.0, -1.0, 2.0}, bad_cut),
                      std::invalid_argument);
    QuadratureSpec bad_nodes;
    bad_nodes.nodes_per_unit = 1;
    REQUIRE_THROWS_AS(gamma_oracle({-1.0, -1.0, 2.0}, bad_nodes),
                      std::invalid_argument);
    QuadratureSpec bad_pv;
    bad_pv.pv_exclusion = -0.25;
    REQUIRE_THROWS_AS(gamma_oracle({-1.0, -1.0, 2.0}, bad_pv),
                      std::invalid_argument);
    bad_pv.pv_exclusion = 1e9;
    REQUIRE_THROWS_AS(gamma_oracle({-1.0, -1.0, 2.0}, bad_pv),
                      std::invalid_argument);
}

TEST_CASE("insufficient cutoff raises a tolerance error with the estimate") {
    QuadratureSpec tight;
    tight.cutoff = 24.0;
    tight.nodes_per_unit = 64;
    // Tail envelope 2^4 / (2 * 24^2) ~ 1.4e-2 cannot certify 1e-6.
    bool thrown = false;
    try {
        gamma_oracle({-1.0, -1.0, 2.0}, tight, 1e-6);
    } catch (const ToleranceError& e) {
        thrown = true;
        REQUIRE(e.achieved() > 1e-3);
        REQUIRE(e.achieved() < 1.0);
    }
    REQUIRE(thrown);
    // The same budget without a requested tolerance stays best-effort.
    REQUIRE(std::isfinite(gamma_oracle({-1.0, -1.0, 2.0}, tight)));
}

TEST_CASE("excluded head mass is charged to the certificate") {
    QuadratureSpec spec;
    spec.cutoff = 4000.0;
    spec.nodes_per_unit = 64;
    spec.pv_exclusion = 1e-11;
    // A vanishing exclusion certifies and agrees with the closed form.
    const double got = gamma_oracle({-1.0, -1.0, 2.0}, spec, 1e-6);
    REQUIRE(std::abs(got - kPiCubed8) < 1e-6);
    // Widening it to 0.2 pushes the head mass far past the tolerance.
    spec.pv_exclusion = 0.2;
    REQUIRE_THROWS_AS(gamma_oracle({-1.0, -1.0, 2.0}, spec, 1e-6),
                      ToleranceError);
}

TEST_CASE("undersampled node budgets refine or refuse") {
    QuadratureSpec sparse;
    sparse.cutoff = 4000.0;
    sparse.nodes_per_unit = 16;  // beat rate 10 wants ~60 per unit
    const std::vector<double> a = {-5.0, -5.0, 10.0};
    REQUIRE(std::isfinite(gamma_oracle(a, sparse)));
    REQUIRE_THROWS_AS(gamma_oracle(a, sparse, 2e-6), ToleranceError);
}

TEST_CASE("runaway node requests are refused") {
    QuadratureSpec huge;
    huge.cutoff = 1e6;
    huge.nodes_per_unit = 100000;
    REQUIRE_THROWS_AS(gamma_oracle({-1.0, -1.0, 2.0}, huge), CapacityError);
}

TEST_CASE("kernel-bundled oracle checks the tuple length") {
    GammaKernel kernel;
    kernel.k = 1;
    kernel.quadrature = quadrature_for_tuple({-1.0, -1.0, 2.0}, 1e-6);
    REQUIRE(rel_gap(gamma_oracle(kernel, {-1.0, -1.0, 2.0}, 1e-6), kPiCubed8) < 1e-7);
    REQUIRE_THROWS_AS(gamma_oracle(kernel, {-1.0, -1.0, -1.0, -1.0, 4.0}),
                      std::invalid_argument);
    kernel.k = 0;
    REQUIRE_THROWS_AS(gamma_oracle(kernel, {-1.0, -1.0, 2.0}),
                      std::invalid_argument);
}

// ============================================================================
// Closed form against the oracle route
// ============================================================================

TEST_CASE("closed form matches the frozen values exactly") {
    REQUIRE(rel_gap(gamma_closed({-1.0, -1.0, 2.0}), kPiCubed8) < 1e-13);
    REQUIRE(rel_gap(gamma_closed({1.0, 1.0, -2.0}), -kPiCubed8) < 1e-13);
    REQUIRE(rel_gap(gamma_closed({-2.0, -2.0, 4.0}), kPiCubed32) < 1e-13);
    REQUIRE(rel_gap(gamma_closed({-1.0, -1.0, -1.0, -1.0, 4.0}), -kTwoPiFifth) < 1e-13);
}

TEST_CASE("closed form tracks the oracle on pinned random tuples") {
    SplitMix64 rng(20260817);
    for (int trial = 0; trial < 24; ++trial) {
        const int k = 1 + static_cast<int>(trial % 2);
        std::vector<double> a(static_cast<std::size_t>(2 * k + 1));
        for (double& x : a) {
            double mag = rng.next_range(0.1, 20.0);
            x = (rng.next_u64() & 1) ? mag : -mag;
        }
        const double closed = gamma_closed(a);
        const double oracle = gamma_oracle(a);
        const double floor = 1e-2 * gamma_certified_bound(a);
        const double denom = std::max({std::abs(closed), std::abs(oracle), floor});
        REQUIRE(std::abs(closed - oracle) / denom < 1e-6);
    }
}

// ============================================================================
// Anchored coordinates
// ============================================================================

TEST_CASE("anchored evaluation agrees with plain doubles at moderate size") {
    std::vector<FreqCoord> a = {{-1000, -0.5}, {1000, 0.75}, {0, 1.0}};
    std::vector<double> plain = {-1000.5, 1000.75, 1.0};
    REQUIRE(rel_gap(gamma_closed_anchored(a), gamma_closed(plain)) < 1e-14);
}

TEST_CASE("anchored evaluation stays exact at anchors near 2^61") {
    // Gamma(-a, -a, 2a+5) = (2 pi)^3 a^2 + Gamma(a, a, 5), and the second
    // term vanishes because its entries share a sign.
    const std::int64_t a = std::int64_t(1) << 60;
    std::vector<FreqCoord> t = {{-a, 0.0}, {-a, 0.0}, {2 * a + 5, 0.0}};
    const double lead = kTwoPi * kTwoPi * kTwoPi * std::ldexp(1.0, 120);
    REQUIRE(rel_gap(gamma_closed_anchored(t), lead) < 1e-13);
}

// ============================================================================
// Structural properties (pinned spot checks; sweeps live in the gate binary)
// ============================================================================

TEST_CASE("odd homogeneity under dilation") {
    std::vector<double> a = {-3.0, 1.5, 7.0};
    for (double c : {3.7, -2.0, 0.25}) {
        std::vector<double> scaled = a;
        for (double& x : scaled) x *= c;
        const double want =
            ((c >= 0.0) ? 1.0 : -1.0) * c * c * gamma_closed(a);
        REQUIRE(rel_gap(gamma_closed(scaled), want) < 1e-12);
    }
}

TEST_CASE("same-sign tuples vanish to rounding") {
    REQUIRE(std::abs(gamma_closed({0.3, 1.2, 7.0})) < 1e-10);
    REQUIRE(std::abs(gamma_closed({2.0, 2.0, 2.0, 2.0, 2.0})) < 1e-9);
    REQUIRE(std::abs(gamma_closed({-1.0, -4.0, -0.5, -2.25, -9.0, -1.0, -3.0})) <
            1e-8);
}

TEST_CASE("permutation invariance") {
    std::vector<double> a = {-5.0, 2.5, 1.0};
    const double base = gamma_closed(a);
    std::sort(a.begin(), a.end());
    do {
        REQUIRE(rel_gap(gamma_closed(a), base) < 1e-13);
    } while (std::next_permutation(a.begin(), a.end()));
}

TEST_CASE("magnitude bounds hold on pinned tuples") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 1 + static_cast<int>(rng.next_below(2));
        std::vector<double> a(static_cast<std::size_t>(2 * k + 1));
        double prod_all = 1.0;
        for (double& x : a) {
            double mag = rng.next_range(0.2, 30.0);
            x = (rng.next_u64() & 1) ? mag : -mag;
            prod_all *= mag;
        }
        const double g = std::abs(gamma_closed(a));
        double pre = kTwoPi;
        for (int i = 0; i < 2 * k; ++i) pre *= kTwoPi;
        REQUIRE(g <= gamma_certified_bound(a) * (1.0 + 1e-12) + 1e-12);
        REQUIRE(g <= pre * std::pow(prod_all, 2.0 * k / (2.0 * k + 1.0)) *
                         (1.0 + 1e-12) +
                     1e-12);
    }
}

TEST_CASE("special-value split is exact with a vanishing remainder") {
    for (int ell : {1, 2}) {
        const double m = (ell == 1) ? 100.0 : 50.0;
        const double M = 2.0 * ell + 3.0;
        const auto sv = gamma_special_value(ell, m, M);
        REQUIRE(std::abs(sv.remainder) < 1e-8 * std::abs(sv.leading));
        REQUIRE(sv.residual < 1e-10 * std::abs(sv.leading));
        REQUIRE(sv.residual <= sv.remainder_cap);
    }
}

TEST_CASE("tuple size validation") {
    REQUIRE_THROWS_AS(gamma_closed({1.0, 2.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(gamma_closed({1.0}), std::invalid_argument);
}

// ============================================================================
// Property reports
// ============================================================================

TEST_CASE("scaling property report on the reference triple") {
    const auto report =
        gamma_property_check({-1.0, -1.0, 2.0}, GammaProperty::kScaling);
    REQUIRE(report.pass);
    REQUIRE(report.residual <= report.scale);
    // The c = -3 instance written out: Gamma(3,3,-6) = 9 * (-1) * Gamma(-1,-1,2).
    const double pi3 = kPi * kPi * kPi;
    REQUIRE(rel_gap(gamma_closed({3.0, 3.0, -6.0}), -72.0 * pi3) < 1e-14);
}

TEST_CASE("same-sign report carries an exactly zero residual") {
    const auto report =
        gamma_property_check({5.0, 1.0, 9.0}, GammaProperty::kSameSignVanishing);
    REQUIRE(report.pass);
    REQUIRE(report.residual == 0.0);
    REQUIRE_THROWS_AS(
        gamma_property_check({5.0, -1.0, 9.0}, GammaProperty::kSameSignVanishing),
        std::invalid_argument);
}

TEST_CASE("permutation report is exhaustive at order one") {
    const auto r1 = gamma_property_check({-5.0, 2.5, 1.0},
                                         GammaProperty::kPermutationSymmetry);
    REQUIRE(r1.pass);
    const auto r2 =
        gamma_property_check({-5.0, 2.5, 1.0, -0.75, 3.25},
                             GammaProperty::kPermutationSymmetry);
    REQUIRE(r2.pass);
}

TEST_CASE("magnitude bound reports on the reference triple") {
    const auto dropped = gamma_property_check({-1.0, -1.0, 2.0},
                                              GammaProperty::kDroppedFactorBound);
    REQUIRE(dropped.pass);
    const auto mean = gamma_property_check({-1.0, -1.0, 2.0},
                                           GammaProperty::kGeometricMeanBound);
    REQUIRE(mean.pass);
    // |8 pi^3| <= (2 pi)^3 * 2^{2/3}, written out.
    const double unit_scale = kTwoPi * kTwoPi * kTwoPi;
    REQUIRE(std::abs(gamma_closed({-1.0, -1.0, 2.0})) <=
            unit_scale * std::cbrt(4.0));
}

TEST_CASE("perturbation report measures a finite constant") {
    const std::vector<double> a = {-3.0, 2.5, 7.0};
    const auto report = gamma_property_check(a, GammaProperty::kPerturbationBound);
    REQUIRE(report.pass);
    REQUIRE(report.residual > 0.0);
    REQUIRE(std::isfinite(report.residual));
    REQUIRE(report.scale == 3.0 + 2.5 + 7.0);
    REQUIRE_THROWS_AS(
        gamma_property_check({-1.5, 2.5, 7.0}, GammaProperty::kPerturbationBound),
        std::invalid_argument);
}

TEST_CASE("property reports are deterministic under a fixed seed") {
    const std::vector<double> a = {-7.0, 3.5, 12.0};
    const auto first = gamma_property_check(a, GammaProperty::kPerturbationBound, 99);
    const auto second = gamma_property_check(a, GammaProperty::kPerturbationBound, 99);
    REQUIRE(first.residual == second.residual);
}

// ============================================================================
// Special-value residual
// ============================================================================

TEST_CASE("normalized special-value residual sits at rounding scale") {
    // The remainder tuple shares one sign, so the split is algebraically
    // exact and the normalized residual is cancellation noise, far below
    // the (2 pi)^{2 ell + 1} M cap.
    for (int ell : {1, 2}) {
        const double M = 2.0 * ell + 3.0;
        double cap = kTwoPi;
        for (int i = 0; i < 2 * ell; ++i) cap *= kTwoPi;
        cap *= M;
        for (double k_val : {1e2, 1e3, 1e4}) {
            const double r = gamma_special_value_check(ell, k_val, M);
            REQUIRE(r <= 1e-3);
            REQUIRE(r <= cap);
        }
    }
    REQUIRE_THROWS_AS(gamma_special_value_check(1, 3.0, 5.0),
                      std::invalid_argument);
}

TEST_CASE("order-two special value is negative") {
    const auto split = gamma_special_value(2, 1e3, 7.0);
    REQUIRE(split.concentrated < 0.0);
    REQUIRE(split.leading < 0.0);
}
