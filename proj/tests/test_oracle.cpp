/// @file test_oracle.cpp
/// @brief Physical-side oracle: closed-form fields, the principal-value
///        operator, and the brute-force Duhamel evaluator, cross-checked
///        against the frequency-side assembly.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "nilab/oracle.hpp"
#include "nilab/second_iterate.hpp"
#include "nilab/sequences.hpp"
#include "nilab/spline_profiles.hpp"

using namespace nilab;

namespace {

/// Frequency-side value of the degree-1 operator applied to the mild field of
/// chi_c + chi_{-c}: the six mixed-sign permutations of (c, c, -c) collapse to
/// a Hermitian fold of three identical terms over the window [c-3, c+3].
double pair_frequency_value(double x, double tau_or_window, bool duhamel) {
    auto term = make_r_term({5, 5, -5});
    IterateQuadrature iq;
    auto ig = [&](double xi) {
        const double v = duhamel ? r_term_duhamel(term, xi - 5.0, {tau_or_window, 0.0}, iq)
                                 : r_term_value(term, xi - 5.0, tau_or_window, iq);
        return v * std::cos(kTwoPi * x * xi);
    };
    const double pf = -1.0 / (3.0 * kPi);
    return pf * 6.0 * gl_piecewise(ig, 2.0, 8.0, {3.0, 4.0, 5.0, 6.0, 7.0}, 16, 0.5);
}

}  // namespace

// ============================================================================
// Fields from profiles
// ============================================================================

TEST_CASE("field mass of a unit bump pair at the origin", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.0);
    CHECK(f.value(0.0) == Catch::Approx(4.0).epsilon(1e-13));
    CHECK(f.max_frequency() == Catch::Approx(6.0));
    CHECK(f.min_frequency() == Catch::Approx(4.0));
    CHECK(f.provenance().find("2 closed-form and 0 quadrature") != std::string::npos);
}

TEST_CASE("closed-form field matches direct quadrature at x = 1/(4c)", "[oracle]") {
    const double x = 1.0 / 20.0;
    for (const double t : {0.0, 0.1}) {
        auto f = field_from_profile(oscillatory_pair(1.0, 5.0), t);
        auto ig = [&](double xi) {
            return 2.0 * std::exp(-kTwoPi * t * xi) * std::cos(kTwoPi * x * xi);
        };
        const double direct = gl_composite(ig, 4.0, 6.0, 16, 0.25);
        // At t = 0 this sample point is an exact zero of the field
        // (sin(3 pi / 5) = sin(2 pi / 5)), so the comparison is absolute.
        CHECK(std::abs(f.value(x) - direct) <= 1e-10);
        if (t > 0.0) {
            CHECK(f.value(x) == Catch::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("field derivative matches a central difference", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
    const double h = 1e-5;
    for (const double x : {0.05, 0.21, 1.3}) {
        const double fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
        CHECK(f.derivative(x) == Catch::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("field linearity over profile sums", "[oracle]") {
    auto a = oscillatory_pair(0.7, 5.0);
    auto b = oscillatory_pair(0.4, 9.0);
    auto fa = field_from_profile(a, 0.05);
    auto fb = field_from_profile(b, 0.05);
    auto fs = field_from_profile(profile_sum(a, b), 0.05);
    for (const double x : {0.0, 0.3, 0.77}) {
        CHECK(fs.value(x) == Catch::Approx(fa.value(x) + fb.value(x)).epsilon(1e-13));
        CHECK(fs.derivative(x) ==
              Catch::Approx(fa.derivative(x) + fb.derivative(x)).epsilon(1e-13));
    }
}

TEST_CASE("hermitian profiles give real fields", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.02);
    for (const double x : {0.0, 0.11, 2.7, -4.3}) {
        CHECK(f.imag_defect(x) <= 1e-12);
    }
}

TEST_CASE("non-constant amplitudes fall back to quadrature", "[oracle]") {
    ProfilePiece p;
    p.lo = 2.0;
    p.hi = 4.0;
    p.amp = [](double xi) { return Complex(xi, 0.0); };
    auto f = field_from_profile(SpectralProfile({p}), 0.0);
    CHECK(f.provenance().find("0 closed-form and 1 quadrature") != std::string::npos);
    // mass at x = 0: int_2^4 xi dxi = 6 (complex value; field takes the real part)
    CHECK(f.value(0.0) == Catch::Approx(6.0).epsilon(1e-12));
    // against a hand-rolled oscillatory integral
    const double x = 0.31;
    auto re = [&](double xi) { return xi * std::cos(kTwoPi * x * xi); };
    CHECK(f.value(x) == Catch::Approx(gl_composite(re, 2.0, 4.0, 16, 0.1)).epsilon(1e-12));
}

TEST_CASE("field envelope bounds hold pointwise", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.3, 5.0), 0.07);
    const double vb = f.sup_bound(0.07);
    const double db = f.deriv_bound(0.07);
    for (int i = 0; i <= 40; ++i) {
        const double x = -2.0 + 0.1 * i;
        CHECK(std::abs(f.value(x)) <= vb);
        CHECK(std::abs(f.derivative(x)) <= db);
    }
}

TEST_CASE("field construction rejects negative time", "[oracle]") {
    CHECK_THROWS_AS(field_from_profile(oscillatory_pair(1.0, 5.0), -0.1), std::invalid_argument);
}

// ============================================================================
// The principal-value operator
// ============================================================================

TEST_CASE("operator on the zero field is exactly zero", "[oracle]") {
    auto f = field_from_profile(SpectralProfile{}, 0.1);
    CHECK(tk_apply(f, 1, 0.0) == 0.0);
    CHECK(tk_apply(f, 2, 0.7) == 0.0);
}

TEST_CASE("operator degree and policy validation", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
    CHECK_THROWS_AS(tk_apply(f, 0, 0.0), std::invalid_argument);
    AlphaQuadrature bad;
    bad.nodes = 1;
    CHECK_THROWS_AS(tk_apply(f, 1, 0.0, bad), std::invalid_argument);
    bad = AlphaQuadrature{};
    bad.inner_h = -1.0;
    CHECK_THROWS_AS(tk_apply(f, 1, 0.0, bad), std::invalid_argument);
}

TEST_CASE("doubling the profile weight scales the operator by 2^{2k+1} exactly",
          "[oracle]") {
    for (const int k : {1, 2}) {
        auto f1 = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
        auto f2 = field_from_profile(oscillatory_pair(2.0, 5.0), 0.1);
        const double scale = std::pow(2.0, 2 * k + 1);
        for (const double x : {0.0, 0.17}) {
            CHECK(tk_apply(f2, k, x) == scale * tk_apply(f1, k, x));
        }
    }
}

TEST_CASE("operator matches the frequency-side integrand at fixed damping", "[oracle]") {
    // Physical side: T_1 applied to the mild field of chi_5 + chi_{-5} at
    // t = 0.1. Frequency side: the six tuple permutations integrated with a
    // uniform-in-tau attenuation and the standard prefactor. The two routes
    // share no code beyond elementary quadrature.
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
    for (const double x : {0.0, 0.05, 0.11}) {
        const double phys = tk_apply(f, 1, x);
        const double freq = pair_frequency_value(x, 0.1, false);
        CHECK(phys == Catch::Approx(freq).epsilon(1e-4));
    }
}

TEST_CASE("halving the center window leaves the operator unchanged", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
    AlphaQuadrature half;
    half.inner_h = 0.5e-3;
    const double a = tk_apply(f, 1, 0.0);
    const double b = tk_apply(f, 1, 0.0, half);
    CHECK(std::abs(a - b) <= 1e-8 * std::abs(a));
}

TEST_CASE("operator is even for even data", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
    for (const double x : {0.4, 1.9}) {
        const double plus = tk_apply(f, 1, x);
        const double minus = tk_apply(f, 1, -x);
        CHECK(plus == Catch::Approx(minus).epsilon(1e-12));
    }
}

TEST_CASE("tail certificate reports the achieved residue", "[oracle]") {
    auto f = field_from_profile(oscillatory_pair(1.0, 5.0), 0.1);
    AlphaQuadrature tight;
    tight.cutoff = 8.0;
    tight.tail_rel = 1e-16;
    tight.tail_abs = 1e-18;
    CHECK_THROWS_AS(tk_apply(f, 1, 0.0, tight), ToleranceError);
    try {
        tk_apply(f, 1, 0.0, tight);
    } catch (const ToleranceError& e) {
        CHECK(e.achieved() > 0.0);
        CHECK(e.achieved() < 1e-6);
    }
}

// ============================================================================
// The Duhamel evaluator
// ============================================================================

TEST_CASE("duhamel evaluator vanishes at time zero", "[oracle]") {
    auto v = duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.0, {0.0, 0.3, 1.1});
    REQUIRE(v.size() == 3);
    for (const double y : v) CHECK(y == 0.0);
}

TEST_CASE("duhamel evaluator validates its policy", "[oracle]") {
    DuhamelOracleSpec bad;
    bad.tau_nodes = 1;
    CHECK_THROWS_AS(duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.1, {0.0}, bad),
                    std::invalid_argument);
    bad = DuhamelOracleSpec{};
    bad.reach = 0.5;
    CHECK_THROWS_AS(duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.1, {0.0}, bad),
                    std::invalid_argument);
    bad = DuhamelOracleSpec{};
    bad.table_per_period = 4;
    CHECK_THROWS_AS(duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.1, {0.0}, bad),
                    std::invalid_argument);
    CHECK_THROWS_AS(duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, -0.1, {0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(duhamel_oracle(oscillatory_pair(1.0, 5.0), 0, 0.1, {0.0}),
                    std::invalid_argument);
}

namespace {

/// Coarse everything: these settings are for algebraic identities only.
DuhamelOracleSpec junk_spec() {
    DuhamelOracleSpec spec;
    spec.alpha = AlphaQuadrature{1e-3, 4.0, 6, 0.0, 1.0, 1.0};
    spec.tau_nodes = 4;
    spec.theta_nodes = 8;
    spec.space_nodes = 6;
    spec.reach = 2.0;
    spec.table_per_period = 8;
    return spec;
}

}  // namespace

TEST_CASE("doubling the profile weight scales the duhamel output by 2^{2k+1} exactly",
          "[oracle]") {
    const auto spec = junk_spec();
    const std::vector<double> xs = {0.0, 0.13};
    auto v1 = duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.1, xs, spec);
    auto v2 = duhamel_oracle(oscillatory_pair(2.0, 5.0), 1, 0.1, xs, spec);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(v2[i] == 8.0 * v1[i]);
    }
}

TEST_CASE("duhamel output is even for even data", "[oracle]") {
    DuhamelOracleSpec spec;
    spec.alpha = AlphaQuadrature{1e-3, 8.0, 12, 0.0, 1e-4, 1e-5};
    spec.tau_nodes = 8;
    spec.reach = 8.0;
    spec.table_per_period = 12;
    auto v = duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.1, {-0.2, 0.2}, spec);
    CHECK(v[0] == Catch::Approx(v[1]).epsilon(1e-6));
}

TEST_CASE("duhamel evaluator matches the frequency-side smoothing", "[oracle]") {
    // The full physical pipeline (mild field, principal-value operator,
    // Poisson smoothing, tau integration) against the exact frequency-side
    // window of the same single-pair data.
    DuhamelOracleSpec spec;
    spec.alpha = AlphaQuadrature{1e-3, 8.0, 12, 0.0, 1e-4, 1e-5};
    spec.tau_nodes = 8;
    spec.reach = 8.0;
    spec.table_per_period = 12;
    const std::vector<double> xs = {0.0, 0.13};
    auto v = duhamel_oracle(oscillatory_pair(1.0, 5.0), 1, 0.1, xs, spec);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double freq = pair_frequency_value(xs[i], 0.1, true);
        CHECK(v[i] == Catch::Approx(freq).epsilon(1e-4));
    }
}
