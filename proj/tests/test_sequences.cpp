/// @file test_sequences.cpp
/// @brief Frequency families: admissibility, generation under caps, tuple
///        enumeration counts, exhaustive sum-lemma verdicts, serialization.

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <map>
#include <vector>

#include "nilab/sequences.hpp"

namespace {
using nilab::CheckState;
using nilab::FamilyParams;
using nilab::FrequencyTuple;
using nilab::GrowthGrade;
using nilab::LemmaReport;
using nilab::SequenceFamily;
using nilab::TupleMode;

FamilyParams default_params(int n) {
    FamilyParams prm;
    prm.ell = 1;
    prm.p = 1.0;
    prm.q = 4.0;
    prm.epsilon = 0.1;
    prm.delta = 1.0;
    prm.M = 5;
    prm.N = n;
    return prm;
}

FamilyParams second_order_params(int n) {
    FamilyParams prm;
    prm.ell = 2;
    prm.p = 1.0;
    prm.q = 6.0;
    prm.epsilon = 0.1;
    prm.delta = 1.0;
    prm.M = 7;
    prm.N = n;
    return prm;
}

/// Count tuples for which the given report field failed.
struct LemmaTally {
    long long visited = 0;
    long long failures = 0;
    long long classification_pm_M = 0;
    long long gap_applicable = 0;
    long long cancellation_applicable = 0;

    void add(const SequenceFamily& fam, const FrequencyTuple& t) {
        const LemmaReport rep = nilab::sum_lemma_check(fam, t);
        ++visited;
        if (rep.any_failure()) ++failures;
        if (t.diagonal && (t.sum == nilab::Anchor(fam.params.M) ||
                           t.sum == -nilab::Anchor(fam.params.M)))
            ++classification_pm_M;
        if (rep.mixed_gap != CheckState::kNotApplicable) ++gap_applicable;
        if (rep.mixed_cancellation != CheckState::kNotApplicable) ++cancellation_applicable;
    }
};

}  // namespace

// ============================================================================
// Parameter validation
// ============================================================================

TEST_CASE("parameter boundaries are rejected exactly", "[sequences]") {
    FamilyParams prm = default_params(4);
    REQUIRE_NOTHROW(prm.validate());

    SECTION("epsilon at the upper boundary q/(2l+1) - 1") {
        prm.epsilon = prm.q / 3.0 - 1.0;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("epsilon zero") {
        prm.epsilon = 0.0;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("M at the boundary 2l + 2") {
        prm.M = 4;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("q at the boundary 2l + 1") {
        prm.q = 3.0;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("p below one") {
        prm.p = 0.5;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("negative delta") {
        prm.delta = -0.1;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("N zero") {
        prm.N = 0;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
    SECTION("ell zero") {
        prm.ell = 0;
        REQUIRE_THROWS_AS(prm.validate(), std::invalid_argument);
    }
}

// ============================================================================
// Generation
// ============================================================================

TEST_CASE("default first-order family at N = 4", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    REQUIRE(fam.j_lo() == 4);
    REQUIRE(fam.j_hi() == 8);
    const std::vector<std::int64_t> want = {8192, 131072, 2097152, 33554432, 536870912};
    CHECK(fam.k_seq == want);
    CHECK(fam.grade == GrowthGrade::kPowerOfTwo);
    CHECK(fam.growth_factor == 16);
    CHECK(fam.k0_seed == 512);
    CHECK(fam.centers_block_disjoint);
    CHECK(fam.mixed_gap_guaranteed());
    CHECK(fam.high_symbol(4) == 16389);

    const auto rep = nilab::check_conditions(fam);
    CHECK(rep.growth_ok);
    CHECK(rep.tail_sum_ok);
    CHECK(rep.seed_ok);
    CHECK(rep.weights_ok);
    CHECK(rep.tail_lhs < rep.tail_rhs);
}

TEST_CASE("generated front frequencies across the sweep", "[sequences]") {
    const SequenceFamily f8 = nilab::generate_family(default_params(8));
    CHECK(f8.k_seq.front() == (std::int64_t(1) << 18));
    CHECK(f8.growth_factor == 16);
    CHECK(f8.k_seq.back() == (std::int64_t(1) << 50));

    const SequenceFamily f16 = nilab::generate_family(default_params(16));
    CHECK(f16.k_seq.front() == (std::int64_t(1) << 24));
    CHECK(f16.growth_factor == 4);
    CHECK(f16.grade == GrowthGrade::kPowerOfTwo);
    CHECK_FALSE(f16.mixed_gap_guaranteed());
    CHECK(f16.k_seq.back() == (std::int64_t(1) << 56));

    const SequenceFamily f32 = nilab::generate_family(default_params(32));
    CHECK(f32.k_seq.front() == (std::int64_t(1) << 29));
    CHECK(f32.grade == GrowthGrade::kMinimalInteger);
    CHECK_FALSE(f32.mixed_gap_guaranteed());
    CHECK_FALSE(f32.centers_block_disjoint);
    CHECK(f32.k_seq.size() == 33);
    CHECK(f32.k_seq.back() == 2305843039278465017LL);
    CHECK(f32.k_seq.back() < nilab::kMagnitudeCap);
    for (std::size_t i = 0; i + 1 < f32.k_seq.size(); ++i)
        CHECK(f32.k_seq[i + 1] == 2 * f32.k_seq[i] + 7);
    CHECK(nilab::check_conditions(f32).all_ok());
}

TEST_CASE("second-order family uses the wide ladder", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(second_order_params(2));
    const std::vector<std::int64_t> want = {8192, 524288, 33554432};
    CHECK(fam.k_seq == want);
    CHECK(fam.growth_factor == 64);
    CHECK(fam.mixed_gap_guaranteed());
    CHECK(fam.high_symbol(2) == 4 * 8192 + 7);
    CHECK(nilab::check_conditions(fam).all_ok());
}

TEST_CASE("single-index family at delta = 0", "[sequences]") {
    FamilyParams prm = default_params(4);
    prm.delta = 0.0;
    const SequenceFamily fam = nilab::generate_family(prm);
    REQUIRE(fam.k_seq.size() == 1);
    CHECK(fam.k_seq.front() == 2048);
    CHECK(fam.k0_seed == 1024);
    CHECK(fam.mixed_gap_guaranteed());
    CHECK(nilab::check_conditions(fam).all_ok());
    CHECK(nilab::collect_tuples(fam, 1, TupleMode::kOffDiagonal).empty());
    CHECK(nilab::collect_tuples(fam, 1, TupleMode::kAll).size() == 64);
}

TEST_CASE("capacity errors distinguish seed and tail overflow", "[sequences]") {
    SECTION("tail overflow even at minimal growth") {
        REQUIRE_THROWS_AS(nilab::generate_family(default_params(300)), nilab::CapacityError);
        REQUIRE_THROWS_WITH(nilab::generate_family(default_params(300)),
                            Catch::Matchers::ContainsSubstring("magnitude cap"));
    }
    SECTION("tail-sum condition beyond the seed cap") {
        REQUIRE_THROWS_WITH(nilab::generate_family(default_params(2048)),
                            Catch::Matchers::ContainsSubstring("seed cap"));
    }
}

TEST_CASE("condition report flags specific violations", "[sequences]") {
    const FamilyParams prm = default_params(4);

    SECTION("small front frequency fails the tail-sum condition") {
        const SequenceFamily fam =
            nilab::make_family(prm, {64, 131072, 2097152, 33554432, 536870912});
        CHECK(fam.grade == GrowthGrade::kCustom);
        const auto rep = nilab::check_conditions(fam);
        CHECK(rep.growth_ok);
        CHECK_FALSE(rep.tail_sum_ok);
    }
    SECTION("slow growth fails the growth condition") {
        const SequenceFamily fam = nilab::make_family(prm, {8192, 16384, 32768, 65536, 131072});
        const auto rep = nilab::check_conditions(fam);
        CHECK_FALSE(rep.growth_ok);
    }
    SECTION("perturbed weight fails the weight condition") {
        SequenceFamily fam = nilab::generate_family(prm);
        fam.gamma_seq[2] *= 1.0 + 1e-6;
        CHECK_FALSE(nilab::check_conditions(fam).weights_ok);
    }
}

// ============================================================================
// Tuple enumeration
// ============================================================================

TEST_CASE("enumeration counts at width 3", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));

    const auto diag = nilab::collect_tuples(fam, 1, TupleMode::kDiagonal);
    REQUIRE(diag.size() == 5 * 64);

    long long not_same_sign = 0;
    long long pm_M = 0;
    for (const auto& t : diag) {
        if (!t.same_sign) ++not_same_sign;
        if (t.sum == nilab::Anchor(5) || t.sum == -nilab::Anchor(5)) ++pm_M;
    }
    CHECK(not_same_sign == 5 * 48);
    CHECK(pm_M == 5 * 6);

    const auto off = nilab::collect_tuples(fam, 1, TupleMode::kOffDiagonal);
    CHECK(off.size() == (125 - 5) * 64);
    long long all_count = 0;
    nilab::enumerate_tuples(fam, 1, TupleMode::kAll,
                            [&](const FrequencyTuple&) { ++all_count; });
    CHECK(all_count == 125 * 64);
}

TEST_CASE("enumeration is lexicographic", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    std::vector<FrequencyTuple> all;
    nilab::enumerate_tuples(fam, 1, TupleMode::kAll,
                            [&](const FrequencyTuple& t) { all.push_back(t); });
    REQUIRE(all.size() == 8000);

    const std::int64_t h4 = fam.high_symbol(4);
    CHECK(all.front().indices == std::vector<int>{4, 4, 4});
    CHECK(all.front().entries == std::vector<std::int64_t>{-h4, -h4, -h4});
    CHECK(all.front().diagonal);
    CHECK(all.front().same_sign);

    const std::int64_t h8 = fam.high_symbol(8);
    CHECK(all.back().indices == std::vector<int>{8, 8, 8});
    CHECK(all.back().entries == std::vector<std::int64_t>{h8, h8, h8});

    // Second tuple flips only the last slot to the next symbol.
    CHECK(all[1].entries == std::vector<std::int64_t>{-h4, -h4, -fam.k(4)});
}

// ============================================================================
// Sum lemmas, exhaustive
// ============================================================================

TEST_CASE("first-order lemma verdicts hold on every tuple", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    REQUIRE(fam.mixed_gap_guaranteed());

    LemmaTally tally;
    nilab::enumerate_tuples(fam, 1, TupleMode::kAll,
                            [&](const FrequencyTuple& t) { tally.add(fam, t); });
    CHECK(tally.visited == 8000);
    CHECK(tally.failures == 0);
    CHECK(tally.classification_pm_M == 5 * 6);
}

TEST_CASE("second-order lemma verdicts hold on every tuple", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(second_order_params(2));
    REQUIRE(fam.mixed_gap_guaranteed());

    SECTION("width 3 (below the top order): no tuple reaches +-M") {
        LemmaTally tally;
        nilab::enumerate_tuples(fam, 1, TupleMode::kAll,
                                [&](const FrequencyTuple& t) { tally.add(fam, t); });
        CHECK(tally.visited == 27 * 64);
        CHECK(tally.failures == 0);
        CHECK(tally.classification_pm_M == 0);
    }
    SECTION("width 5 (top order): ten exceptional tuples per index") {
        LemmaTally tally;
        nilab::enumerate_tuples(fam, 2, TupleMode::kAll,
                                [&](const FrequencyTuple& t) { tally.add(fam, t); });
        CHECK(tally.visited == 243 * 1024);
        CHECK(tally.failures == 0);
        CHECK(tally.classification_pm_M == 3 * 10);
    }
}

TEST_CASE("exceptional diagonal tuples are gated out of the gap check", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    int seen = 0;
    nilab::enumerate_tuples(fam, 1, TupleMode::kDiagonal, [&](const FrequencyTuple& t) {
        if (t.sum != nilab::Anchor(5) && t.sum != -nilab::Anchor(5)) return;
        ++seen;
        const LemmaReport rep = nilab::sum_lemma_check(fam, t);
        CHECK(rep.diag_classification == CheckState::kHolds);
        CHECK(rep.diag_gap == CheckState::kNotApplicable);
        CHECK(rep.mixed_gap == CheckState::kNotApplicable);
        // The cancellation bound still applies and still holds.
        CHECK(rep.diag_cancellation == CheckState::kHolds);
    });
    CHECK(seen == 30);
}

TEST_CASE("narrow ladder admits a mixed-gap counterexample", "[sequences]") {
    // Growth factor 4 satisfies every admissibility condition, yet the tuple
    // (+k_5, -(2 k_4 + M), -(2 k_4 + M)) sums to -2M: far below k_j/4 for
    // every index in range. The guarantee flag must gate the check off.
    FamilyParams prm = default_params(4);
    prm.delta = 0.5;
    const SequenceFamily fam = nilab::make_family(prm, {8192, 32768, 131072});
    REQUIRE(fam.grade == GrowthGrade::kPowerOfTwo);
    REQUIRE(fam.growth_factor == 4);
    REQUIRE(nilab::check_conditions(fam).all_ok());
    REQUIRE_FALSE(fam.mixed_gap_guaranteed());

    bool found = false;
    nilab::enumerate_tuples(fam, 1, TupleMode::kOffDiagonal, [&](const FrequencyTuple& t) {
        if (t.indices != std::vector<int>{5, 4, 4}) return;
        if (t.entries != std::vector<std::int64_t>{fam.k(5), -fam.high_symbol(4),
                                                   -fam.high_symbol(4)})
            return;
        found = true;
        CHECK(t.sum == -10);
        CHECK(4 * nilab::anchor_abs(t.sum) < nilab::Anchor(fam.k_seq.front()));
        const LemmaReport rep = nilab::sum_lemma_check(fam, t);
        CHECK(rep.mixed_gap == CheckState::kNotApplicable);
        CHECK(rep.mixed_cancellation == CheckState::kHolds);
        CHECK(rep.mixed_max == CheckState::kHolds);
        CHECK(rep.triangle == CheckState::kHolds);
    });
    CHECK(found);
}

// ============================================================================
// Initial data
// ============================================================================

TEST_CASE("initial data carries four disjoint bumps per index", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    const auto bumps = nilab::initial_bumps(fam);
    REQUIRE(bumps.size() == 20);

    const auto profile = nilab::build_initial_data(fam);
    CHECK(profile.support_radius() == Catch::Approx(2.0 * 536870912 + 5 + 1));
    CHECK(nilab::hermitian_defect(profile, 64, 20260817u) == 0.0);

    // Quadrature norm over the profile agrees with the exact bump norm.
    const nilab::NormParams nrm{fam.params.smoothness(), 1.0, 4.0};
    const double exact = nilab::besov_norm_exact(bumps, nrm);
    const double quad = nilab::besov_norm(profile, nrm);
    CHECK(quad == Catch::Approx(exact).epsilon(1e-10));
}

TEST_CASE("colliding centers are refused", "[sequences]") {
    FamilyParams prm = default_params(4);
    prm.delta = 0.25;
    // high_symbol(4) = 2*8192 + 5 = 16389 collides with k_5 = 16389.
    const SequenceFamily fam = nilab::make_family(prm, {8192, 16389});
    REQUIRE_THROWS_AS(nilab::initial_bumps(fam), std::logic_error);
}

TEST_CASE("profile construction refuses centers beyond 2^52", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(16));
    REQUIRE_THROWS_AS(nilab::build_initial_data(fam), std::domain_error);
    REQUIRE_NOTHROW(nilab::initial_bumps(fam));
}

TEST_CASE("weight normalization collapses the norm bound sum", "[sequences]") {
    double ratio_min = 1e300;
    double ratio_max = 0.0;
    for (const int n : {4, 8, 16, 32}) {
        const SequenceFamily fam = nilab::generate_family(default_params(n));
        const auto id = nilab::initial_norm_identity(fam);
        CHECK(id.rel_gap <= 1e-14);
        CHECK(id.ratio > 1.0);
        CHECK(id.ratio < 16.0);
        ratio_min = std::min(ratio_min, id.ratio);
        ratio_max = std::max(ratio_max, id.ratio);
        if (n == 4) CHECK(id.norm == Catch::Approx(4.7414355985464214).epsilon(1e-12));
    }
    // Annulus sharing under minimal growth lifts the N = 32 ratio by about
    // 8^(1/4); the spread stays well inside a factor of four.
    CHECK(ratio_max / ratio_min < 4.0);
}

// ============================================================================
// Serialization
// ============================================================================

TEST_CASE("JSON round trip preserves every stored value", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(8));
    const std::string text = nilab::family_to_json(fam);
    const SequenceFamily back = nilab::family_from_json(text);

    CHECK(back.params.ell == fam.params.ell);
    CHECK(back.params.p == fam.params.p);
    CHECK(back.params.q == fam.params.q);
    CHECK(back.params.epsilon == fam.params.epsilon);
    CHECK(back.params.delta == fam.params.delta);
    CHECK(back.params.M == fam.params.M);
    CHECK(back.params.N == fam.params.N);
    CHECK(back.k_seq == fam.k_seq);
    CHECK(back.gamma_seq == fam.gamma_seq);
    CHECK(back.grade == fam.grade);
    CHECK(back.growth_factor == fam.growth_factor);
    CHECK(back.k0_seed == fam.k0_seed);
    CHECK(back.centers_block_disjoint == fam.centers_block_disjoint);
}

TEST_CASE("JSON fields appear in the documented order", "[sequences]") {
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    const std::string text = nilab::family_to_json(fam);
    std::size_t pos = 0;
    for (const char* key : {"\"ell\"", "\"p\"", "\"q\"", "\"epsilon\"", "\"delta\"", "\"M\"",
                            "\"N\"", "\"k_seq\"", "\"gamma_seq\""}) {
        const std::size_t at = text.find(key);
        REQUIRE(at != std::string::npos);
        CHECK(at > pos);
        pos = at;
    }
}

TEST_CASE("malformed JSON is rejected with a reason", "[sequences]") {
    REQUIRE_THROWS_AS(nilab::family_from_json("{"), std::invalid_argument);
    REQUIRE_THROWS_AS(nilab::family_from_json("{\"ell\": 1}"), std::invalid_argument);
    const SequenceFamily fam = nilab::generate_family(default_params(4));
    std::string text = nilab::family_to_json(fam);
    // Truncating the slice breaks the shape contract.
    const std::size_t at = text.find("\"k_seq\"");
    REQUIRE(at != std::string::npos);
    std::string broken = text;
    broken.replace(at, 7, "\"kseq\"");
    REQUIRE_THROWS_AS(nilab::family_from_json(broken), std::invalid_argument);
}
