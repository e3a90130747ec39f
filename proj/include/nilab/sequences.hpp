/// @file sequences.hpp
/// @brief Lacunary frequency families: admissibility conditions, generation
///        under capacity caps, oscillatory initial data, exhaustive symbol
///        tuple enumeration, and exact integer checks of the sum lemmas.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nilab/besov_norm.hpp"
#include "nilab/common.hpp"
#include "nilab/spline_profiles.hpp"
#include "nilab/summation.hpp"

namespace nilab {

// ============================================================================
// Parameters
// ============================================================================

/// Parameters of a frequency family at order ell. The admissible region is
///   p >= 1,  q > 2*ell + 1,  0 < epsilon < q/(2*ell+1) - 1,
///   M > 2*ell + 2 (integer),  delta >= 0,  N >= 1.
/// Boundary values are rejected.
struct FamilyParams {
    int ell = 1;
    double p = 1.0;
    double q = 4.0;
    double epsilon = 0.1;
    double delta = 1.0;
    std::int64_t M = 5;
    int N = 4;

    /// Smoothness index carried by the weights: (2*ell-1)/(2*ell+1).
    double smoothness() const {
        return (2.0 * ell - 1.0) / (2.0 * ell + 1.0);
    }

    /// Last index of the family slice: floor((1+delta)*N).
    int j_hi() const { return static_cast<int>(std::floor((1.0 + delta) * N)); }

    void validate() const {
        if (ell < 1) throw std::invalid_argument("family requires ell >= 1");
        if (!(p >= 1.0) || !std::isfinite(p))
            throw std::invalid_argument("family requires finite p >= 1");
        const double order = 2.0 * ell + 1.0;
        if (!(q > order) || !std::isfinite(q))
            throw std::invalid_argument("family requires q > 2*ell + 1");
        if (!(epsilon > 0.0) || !(epsilon < q / order - 1.0))
            throw std::invalid_argument(
                "family requires 0 < epsilon < q/(2*ell+1) - 1, boundaries excluded");
        if (M <= 2 * static_cast<std::int64_t>(ell) + 2)
            throw std::invalid_argument("family requires integer M > 2*ell + 2");
        if (!(delta >= 0.0) || !std::isfinite(delta))
            throw std::invalid_argument("family requires finite delta >= 0");
        if (N < 1) throw std::invalid_argument("family requires N >= 1");
    }
};

// ============================================================================
// Family
// ============================================================================

/// How the stored frequencies grow from one index to the next.
enum class GrowthGrade {
    kPowerOfTwo,      ///< k_{j+1} = G * k_j with a fixed power-of-two G
    kMinimalInteger,  ///< k_{j+1} = max(ell^2, 2*ell) * k_j + M + 2
    kCustom,          ///< hand-built; no structural guarantee beyond monotonicity
};

/// A finite slice k_N, ..., k_{floor((1+delta)N)} of a lacunary frequency
/// sequence together with its weights gamma_j. Derived structural flags are
/// recomputed from the stored values, never trusted from input.
struct SequenceFamily {
    FamilyParams params;
    std::vector<std::int64_t> k_seq;
    std::vector<double> gamma_seq;

    // Derived by finalize: see make_family / family_from_json.
    GrowthGrade grade = GrowthGrade::kCustom;
    std::int64_t growth_factor = 0;  ///< power-of-two grade only; 0 otherwise
    std::int64_t k0_seed = 0;        ///< notional predecessor used by the seed condition
    bool centers_block_disjoint = false;

    int j_lo() const { return params.N; }
    int j_hi() const { return params.N + static_cast<int>(k_seq.size()) - 1; }

    std::int64_t k(int j) const { return k_seq.at(static_cast<std::size_t>(j - j_lo())); }
    double gamma(int j) const { return gamma_seq.at(static_cast<std::size_t>(j - j_lo())); }

    /// The companion symbol 2*ell*k_j + M.
    std::int64_t high_symbol(int j) const {
        return 2 * static_cast<std::int64_t>(params.ell) * k(j) + params.M;
    }

    /// Whether the gap estimate for mixed-index tuple sums is guaranteed by
    /// the growth: a single stored index, or a power-of-two ladder with
    /// G >= 16*ell^2. Families below that growth can realize tuple sums that
    /// defeat the estimate (see the counterexample in the test suite).
    bool mixed_gap_guaranteed() const {
        if (k_seq.size() == 1) return true;
        return grade == GrowthGrade::kPowerOfTwo &&
               growth_factor >= 16 * static_cast<std::int64_t>(params.ell) * params.ell;
    }
};

namespace detail {

/// Largest admissible frequency: int64 arithmetic on 2*ell*k + M must stay
/// exact, and nothing exceeds the global magnitude cap.
inline std::int64_t frequency_cap(const FamilyParams& prm) {
    const std::int64_t sym =
        (std::numeric_limits<std::int64_t>::max() - prm.M) / (2 * static_cast<std::int64_t>(prm.ell));
    return std::min(kMagnitudeCap, sym);
}

/// Smallest power of two strictly exceeding v.
inline std::int64_t next_pow2_above(std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    std::uint64_t c = std::bit_ceil(u);
    if (c == u) c <<= 1;
    return static_cast<std::int64_t>(c);
}

/// Recompute the structural flags of a family from its stored values and
/// validate the shape. Throws std::invalid_argument on malformed input.
inline void finalize_family(SequenceFamily& fam) {
    const FamilyParams& prm = fam.params;
    prm.validate();
    const std::size_t count = static_cast<std::size_t>(prm.j_hi() - prm.N + 1);
    if (fam.k_seq.size() != count)
        throw std::invalid_argument("family slice must hold floor((1+delta)N) - N + 1 entries");
    if (fam.gamma_seq.size() != count)
        throw std::invalid_argument("family weights must match the slice length");
    const std::int64_t cap = frequency_cap(prm);
    for (std::size_t i = 0; i < count; ++i) {
        if (fam.k_seq[i] < 2) throw std::invalid_argument("frequencies must be >= 2");
        if (fam.k_seq[i] > cap) throw std::invalid_argument("frequency exceeds the magnitude cap");
        if (i > 0 && fam.k_seq[i] <= fam.k_seq[i - 1])
            throw std::invalid_argument("frequencies must be strictly increasing");
        if (!(fam.gamma_seq[i] > 0.0) || !std::isfinite(fam.gamma_seq[i]))
            throw std::invalid_argument("weights must be positive and finite");
    }

    // Growth grade.
    fam.grade = GrowthGrade::kCustom;
    fam.growth_factor = 0;
    if (count == 1) {
        fam.grade = GrowthGrade::kPowerOfTwo;
    } else {
        bool pow2 = (fam.k_seq[1] % fam.k_seq[0]) == 0;
        const std::int64_t g = pow2 ? fam.k_seq[1] / fam.k_seq[0] : 0;
        pow2 = pow2 && g >= 2 && std::has_single_bit(static_cast<std::uint64_t>(g));
        const std::int64_t mul =
            std::max<std::int64_t>(static_cast<std::int64_t>(prm.ell) * prm.ell, 2 * prm.ell);
        bool minimal = true;
        for (std::size_t i = 0; i + 1 < count; ++i) {
            const Anchor prev = fam.k_seq[i];
            if (pow2 && Anchor(fam.k_seq[i + 1]) != prev * g) pow2 = false;
            if (minimal && Anchor(fam.k_seq[i + 1]) != mul * prev + prm.M + 2) minimal = false;
        }
        if (pow2) {
            fam.grade = GrowthGrade::kPowerOfTwo;
            fam.growth_factor = g;
        } else if (minimal) {
            fam.grade = GrowthGrade::kMinimalInteger;
        }
    }

    // Notional predecessor of k_N.
    fam.k0_seed = (fam.grade == GrowthGrade::kPowerOfTwo && fam.growth_factor >= 2)
                      ? fam.k_seq.front() / fam.growth_factor
                      : fam.k_seq.front() / 2;

    // Are all 4n bump centers in pairwise distinct dyadic annuli?
    std::vector<int> blocks;
    blocks.reserve(2 * count);
    for (std::size_t i = 0; i < count; ++i) {
        const int j = prm.N + static_cast<int>(i);
        blocks.push_back(block_index(Anchor(fam.k_seq[i])));
        blocks.push_back(block_index(Anchor(fam.high_symbol(j))));
    }
    std::sort(blocks.begin(), blocks.end());
    fam.centers_block_disjoint =
        std::adjacent_find(blocks.begin(), blocks.end()) == blocks.end();
}

/// Left-hand side of the tail-sum condition: sum_{j=N}^{j_hi} j^{-m(1+eps)/q}.
inline double tail_sum_lhs(const FamilyParams& prm) {
    const double expo = prm.smoothness() * (1.0 + prm.epsilon) / prm.q;
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(prm.j_hi() - prm.N + 1));
    for (int j = prm.N; j <= prm.j_hi(); ++j) terms.push_back(std::pow(j, -expo));
    return sum_descending_magnitude(std::move(terms));
}

}  // namespace detail

// ============================================================================
// Admissibility conditions
// ============================================================================

/// Per-condition result of checking a family against the four admissibility
/// conditions:
///   (growth)  k_{j+1} > ell^2 k_j + M  (ell >= 2), resp. > 2 k_j + M (ell = 1)
///   (tail)    sum_j j^{-m(1+eps)/q} < k_N^{1/(2ell+1)} / N
///   (seed)    (2ell+1) M < k0_seed / 2
///   (weights) gamma_j = j^{-(1+eps)/q} k_j^{-m} to 1e-12 relative
struct ConditionReport {
    bool growth_ok = false;
    bool tail_sum_ok = false;
    bool seed_ok = false;
    bool weights_ok = false;
    double tail_lhs = 0.0;
    double tail_rhs = 0.0;

    bool all_ok() const { return growth_ok && tail_sum_ok && seed_ok && weights_ok; }
};

inline ConditionReport check_conditions(const SequenceFamily& fam) {
    const FamilyParams& prm = fam.params;
    ConditionReport rep;

    const Anchor growth_mul = prm.ell == 1 ? 2 : static_cast<Anchor>(prm.ell) * prm.ell;
    rep.growth_ok = true;
    for (std::size_t i = 0; i + 1 < fam.k_seq.size(); ++i) {
        if (Anchor(fam.k_seq[i + 1]) <= growth_mul * fam.k_seq[i] + prm.M) {
            rep.growth_ok = false;
            break;
        }
    }

    rep.tail_lhs = detail::tail_sum_lhs(prm);
    rep.tail_rhs = std::pow(static_cast<double>(fam.k_seq.front()), 1.0 / (2.0 * prm.ell + 1.0)) /
                   static_cast<double>(prm.N);
    rep.tail_sum_ok = rep.tail_lhs < rep.tail_rhs;

    rep.seed_ok = 2 * (2 * static_cast<Anchor>(prm.ell) + 1) * prm.M < Anchor(fam.k0_seed);

    rep.weights_ok = true;
    const double m = prm.smoothness();
    for (std::size_t i = 0; i < fam.k_seq.size(); ++i) {
        const int j = prm.N + static_cast<int>(i);
        const double want = std::pow(static_cast<double>(j), -(1.0 + prm.epsilon) / prm.q) *
                            std::pow(static_cast<double>(fam.k_seq[i]), -m);
        if (!(std::abs(fam.gamma_seq[i] - want) <= 1e-12 * want)) {
            rep.weights_ok = false;
            break;
        }
    }
    return rep;
}

// ============================================================================
// Construction
// ============================================================================

/// Build a family from explicit frequencies; the weights are computed from
/// the defining formula gamma_j = j^{-(1+eps)/q} k_j^{-m}. Structural flags
/// are derived from the values. No admissibility check beyond shape; use
/// check_conditions for the full report.
inline SequenceFamily make_family(const FamilyParams& prm, std::vector<std::int64_t> k_seq) {
    prm.validate();
    SequenceFamily fam;
    fam.params = prm;
    fam.k_seq = std::move(k_seq);
    const double m = prm.smoothness();
    fam.gamma_seq.reserve(fam.k_seq.size());
    for (std::size_t i = 0; i < fam.k_seq.size(); ++i) {
        const int j = prm.N + static_cast<int>(i);
        fam.gamma_seq.push_back(std::pow(static_cast<double>(j), -(1.0 + prm.epsilon) / prm.q) *
                                std::pow(static_cast<double>(fam.k_seq[i]), -m));
    }
    detail::finalize_family(fam);
    return fam;
}

/// Build a family with explicit weights (cross-validation against physical
/// space quadrature wants unit weights). The weight condition will generally
/// fail in check_conditions; everything else works unchanged.
inline SequenceFamily make_family(const FamilyParams& prm, std::vector<std::int64_t> k_seq,
                                  std::vector<double> gamma_seq) {
    prm.validate();
    if (gamma_seq.size() != k_seq.size())
        throw std::invalid_argument("weights and frequencies must have equal length");
    SequenceFamily fam;
    fam.params = prm;
    fam.k_seq = std::move(k_seq);
    fam.gamma_seq = std::move(gamma_seq);
    detail::finalize_family(fam);
    return fam;
}

/// Generate an admissible family for the given parameters.
///
/// Seed: k0 = smallest power of two exceeding max(2(2ell+1)M, 64), which
/// makes the seed condition automatic. k_N = G*k0 with k0 doubled until the
/// tail-sum condition holds strictly; k_N beyond the 2^60 seed cap is a
/// CapacityError. Growth ladder: G starts at the smallest power of two with
/// G >= 16*ell^2 (the mixed-gap guarantee) and halves, never below
/// max(4, bit_ceil(ell^2+1)), until the projected k_max fits the frequency
/// cap. If no power-of-two ladder fits, falls back to the minimal integer
/// growth k_{j+1} = max(ell^2, 2ell)*k_j + M + 2 (the +2 keeps the half-open
/// bump supports disjoint); if even that overflows, CapacityError.
inline SequenceFamily generate_family(const FamilyParams& prm) {
    prm.validate();
    const int steps = prm.j_hi() - prm.N;
    const std::int64_t cap = detail::frequency_cap(prm);
    const double lhs = detail::tail_sum_lhs(prm);
    const double inv_order = 1.0 / (2.0 * prm.ell + 1.0);

    const std::int64_t seed0 = detail::next_pow2_above(
        std::max<std::int64_t>(2 * (2 * static_cast<std::int64_t>(prm.ell) + 1) * prm.M, 64));

    // Smallest admissible k_N = growth * (seed0 doubled until the tail-sum
    // condition holds). The threshold depends only on k_N, not on growth.
    const auto seeded_front = [&](std::int64_t growth) -> std::int64_t {
        std::int64_t seed = seed0;
        for (;;) {
            const Anchor kn = Anchor(growth) * seed;
            if (kn > kSeedCap)
                throw CapacityError(
                    "tail-sum condition needs k_N beyond the 2^60 seed cap; "
                    "reduce N, delta, or the weight exponent");
            const double rhs =
                std::pow(anchor_to_double(kn), inv_order) / static_cast<double>(prm.N);
            if (lhs < rhs) return seed;
            seed *= 2;
        }
    };

    const std::int64_t g_pref =
        detail::next_pow2_above(16 * static_cast<std::int64_t>(prm.ell) * prm.ell - 1);
    const std::int64_t g_min = std::max<std::int64_t>(
        4, detail::next_pow2_above(static_cast<std::int64_t>(prm.ell) * prm.ell));

    for (std::int64_t g = g_pref; g >= g_min; g /= 2) {
        const std::int64_t seed = seeded_front(g);
        Anchor probe = Anchor(g) * seed;
        bool fits = true;
        for (int s = 0; s < steps && fits; ++s) {
            probe *= g;
            if (probe > cap) fits = false;
        }
        if (!fits) continue;
        std::vector<std::int64_t> ks(static_cast<std::size_t>(steps) + 1);
        ks[0] = g * seed;
        for (int s = 0; s < steps; ++s) ks[static_cast<std::size_t>(s) + 1] = ks[s] * g;
        SequenceFamily fam = make_family(prm, std::move(ks));
        if (!check_conditions(fam).all_ok())
            throw std::logic_error("generated power-of-two family fails its own conditions");
        return fam;
    }

    // Minimal integer growth fallback.
    const std::int64_t mul =
        std::max<std::int64_t>(static_cast<std::int64_t>(prm.ell) * prm.ell, 2 * prm.ell);
    const std::int64_t seed = seeded_front(2);
    Anchor probe = Anchor(2) * seed;
    for (int s = 0; s < steps; ++s) {
        probe = mul * probe + prm.M + 2;
        if (probe > cap)
            throw CapacityError(
                "family tail exceeds the frequency magnitude cap even at minimal growth; "
                "reduce N or delta");
    }
    std::vector<std::int64_t> ks(static_cast<std::size_t>(steps) + 1);
    ks[0] = 2 * seed;
    for (int s = 0; s < steps; ++s)
        ks[static_cast<std::size_t>(s) + 1] = mul * ks[s] + prm.M + 2;
    SequenceFamily fam = make_family(prm, std::move(ks));
    if (!check_conditions(fam).all_ok())
        throw std::logic_error("generated minimal-growth family fails its own conditions");
    return fam;
}

// ============================================================================
// Initial data
// ============================================================================

/// The 4n width-2 bumps of the oscillatory initial data: amplitude gamma_j
/// at centers +-k_j and +-(2*ell*k_j + M), exact integer centers. Throws if
/// any two supports overlap (the generator's growth rules prevent it).
inline std::vector<IndicatorBump> initial_bumps(const SequenceFamily& fam) {
    std::vector<IndicatorBump> out;
    out.reserve(4 * fam.k_seq.size());
    for (int j = fam.j_lo(); j <= fam.j_hi(); ++j) {
        const double g = fam.gamma(j);
        for (const std::int64_t c : {fam.k(j), fam.high_symbol(j)}) {
            out.push_back({c, g});
            out.push_back({-c, g});
        }
    }
    std::vector<std::int64_t> centers;
    centers.reserve(out.size());
    for (const auto& b : out) centers.push_back(b.center);
    std::sort(centers.begin(), centers.end());
    for (std::size_t i = 0; i + 1 < centers.size(); ++i)
        if (centers[i + 1] - centers[i] < 2)
            throw std::logic_error("initial-data bump supports overlap");
    return out;
}

/// The same initial data as a piecewise profile for quadrature-based code.
/// Requires every center below 2^52 so the floating-point geometry is exact;
/// beyond that use initial_bumps with the exact norm path.
inline SpectralProfile build_initial_data(const SequenceFamily& fam) {
    const std::int64_t limit = std::int64_t(1) << 52;
    std::vector<std::pair<double, double>> gc;
    gc.reserve(4 * fam.k_seq.size());
    for (int j = fam.j_lo(); j <= fam.j_hi(); ++j) {
        if (fam.high_symbol(j) >= limit)
            throw std::domain_error("profile construction requires centers below 2^52");
        const double g = fam.gamma(j);
        gc.emplace_back(g, static_cast<double>(fam.k(j)));
        gc.emplace_back(g, -static_cast<double>(fam.k(j)));
        gc.emplace_back(g, static_cast<double>(fam.high_symbol(j)));
        gc.emplace_back(g, -static_cast<double>(fam.high_symbol(j)));
    }
    return profile_from_bumps(gc);
}

// ============================================================================
// Tuple enumeration
// ============================================================================

enum class TupleMode {
    kDiagonal,     ///< all 2k+1 slots share one index
    kOffDiagonal,  ///< at least two distinct indices
    kAll,
};

/// One symbol tuple (c_1, ..., c_{2k+1}) with c_i in
/// {+-k_{j_i}, +-(2*ell*k_{j_i} + M)}. The sum is exact.
struct FrequencyTuple {
    std::vector<std::int64_t> entries;
    std::vector<int> indices;
    Anchor sum = 0;
    bool diagonal = false;
    bool same_sign = false;
};

/// Visit every tuple of width 2k+1 over the family's symbol alphabet in
/// lexicographic order: index vectors ascending, then the four symbols per
/// slot ascending (-high, -k, +k, +high). The visitor receives a reused
/// buffer; copy it to keep it.
inline void enumerate_tuples(const SequenceFamily& fam, int k, TupleMode mode,
                             const std::function<void(const FrequencyTuple&)>& visit) {
    if (k < 1) throw std::invalid_argument("tuple width requires k >= 1");
    const int width = 2 * k + 1;
    const int n = static_cast<int>(fam.k_seq.size());

    FrequencyTuple t;
    t.entries.resize(static_cast<std::size_t>(width));
    t.indices.resize(static_cast<std::size_t>(width));

    std::vector<int> jd(static_cast<std::size_t>(width), 0);
    std::vector<int> sym(static_cast<std::size_t>(width), 0);

    const auto emit_symbol_block = [&](bool diagonal) {
        std::fill(sym.begin(), sym.end(), 0);
        t.diagonal = diagonal;
        for (;;) {
            Anchor sum = 0;
            bool all_pos = true;
            bool all_neg = true;
            for (int i = 0; i < width; ++i) {
                const int off = jd[static_cast<std::size_t>(i)];
                const int j = fam.j_lo() + off;
                const std::int64_t kv = fam.k_seq[static_cast<std::size_t>(off)];
                const std::int64_t hv = fam.high_symbol(j);
                std::int64_t e = 0;
                switch (sym[static_cast<std::size_t>(i)]) {
                    case 0: e = -hv; break;
                    case 1: e = -kv; break;
                    case 2: e = kv; break;
                    default: e = hv; break;
                }
                t.entries[static_cast<std::size_t>(i)] = e;
                t.indices[static_cast<std::size_t>(i)] = j;
                sum += e;
                all_pos = all_pos && e > 0;
                all_neg = all_neg && e < 0;
            }
            t.sum = sum;
            t.same_sign = all_pos || all_neg;
            visit(t);

            int pos = width - 1;
            while (pos >= 0 && sym[static_cast<std::size_t>(pos)] == 3)
                sym[static_cast<std::size_t>(pos--)] = 0;
            if (pos < 0) break;
            ++sym[static_cast<std::size_t>(pos)];
        }
    };

    if (mode == TupleMode::kDiagonal) {
        for (int d = 0; d < n; ++d) {
            std::fill(jd.begin(), jd.end(), d);
            emit_symbol_block(true);
        }
        return;
    }
    for (;;) {
        const bool diagonal =
            std::all_of(jd.begin(), jd.end(), [&](int v) { return v == jd[0]; });
        if (!(mode == TupleMode::kOffDiagonal && diagonal)) emit_symbol_block(diagonal);
        int pos = width - 1;
        while (pos >= 0 && jd[static_cast<std::size_t>(pos)] == n - 1)
            jd[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0) break;
        ++jd[static_cast<std::size_t>(pos)];
    }
}

/// Materialized variant for small enumerations.
inline std::vector<FrequencyTuple> collect_tuples(const SequenceFamily& fam, int k,
                                                  TupleMode mode) {
    std::vector<FrequencyTuple> out;
    enumerate_tuples(fam, k, mode, [&](const FrequencyTuple& t) { out.push_back(t); });
    return out;
}

// ============================================================================
// Sum lemmas
// ============================================================================

enum class CheckState { kNotApplicable, kHolds, kFails };

/// Exact integer verdicts for the tuple-sum lemmas. Diagonal checks apply
/// only to diagonal tuples; each check is gated by its hypothesis and
/// reports kNotApplicable when the hypothesis fails.
struct LemmaReport {
    /// Diagonal: sum == +-M exactly when k == ell and the tuple is one
    /// high symbol against 2k opposite low symbols.
    CheckState diag_classification = CheckState::kNotApplicable;
    /// Diagonal, mixed signs, sum != +-M: |sum| >= k_j / 2.
    CheckState diag_gap = CheckState::kNotApplicable;
    /// Diagonal, mixed signs: sum|c| - |sum| >= 2 k_j.
    CheckState diag_cancellation = CheckState::kNotApplicable;
    /// Any tuple, sum != +-M, growth-guaranteed family: |sum| >= k_jmin / 4
    /// with jmin the smallest index appearing in the tuple.
    CheckState mixed_gap = CheckState::kNotApplicable;
    /// Any tuple, mixed signs: sum|c| - |sum| >= 2 k_jmin.
    CheckState mixed_cancellation = CheckState::kNotApplicable;
    /// Any tuple: max(|sum|, sum|c| - |sum|) >= max|c| / 2.
    CheckState mixed_max = CheckState::kNotApplicable;
    /// Mixed signs: sum|c| - |sum| >= 2 min|c|.
    CheckState triangle = CheckState::kNotApplicable;

    bool any_failure() const {
        const auto bad = [](CheckState s) { return s == CheckState::kFails; };
        return bad(diag_classification) || bad(diag_gap) || bad(diag_cancellation) ||
               bad(mixed_gap) || bad(mixed_cancellation) || bad(mixed_max) || bad(triangle);
    }
};

inline LemmaReport sum_lemma_check(const SequenceFamily& fam, const FrequencyTuple& t) {
    LemmaReport rep;
    const int width = static_cast<int>(t.entries.size());
    const int k = (width - 1) / 2;
    const std::int64_t M = fam.params.M;

    const Anchor abs_sum = anchor_abs(t.sum);
    Anchor sum_abs = 0;
    Anchor max_abs = 0;
    Anchor min_abs = 0;
    int j_min = t.indices.front();
    for (int i = 0; i < width; ++i) {
        const Anchor a = anchor_abs(Anchor(t.entries[static_cast<std::size_t>(i)]));
        sum_abs += a;
        max_abs = std::max(max_abs, a);
        min_abs = i == 0 ? a : std::min(min_abs, a);
        j_min = std::min(j_min, t.indices[static_cast<std::size_t>(i)]);
    }
    const bool is_pm_M = t.sum == Anchor(M) || t.sum == -Anchor(M);
    const Anchor cancellation = sum_abs - abs_sum;

    const auto gate = [](bool applicable, bool holds) {
        if (!applicable) return CheckState::kNotApplicable;
        return holds ? CheckState::kHolds : CheckState::kFails;
    };

    if (t.diagonal) {
        const int j = t.indices.front();
        const std::int64_t kj = fam.k(j);
        const std::int64_t hj = fam.high_symbol(j);
        int n_high_pos = 0, n_high_neg = 0, n_low_pos = 0, n_low_neg = 0;
        for (const std::int64_t e : t.entries) {
            if (e == hj) ++n_high_pos;
            else if (e == -hj) ++n_high_neg;
            else if (e == kj) ++n_low_pos;
            else ++n_low_neg;
        }
        const bool exceptional =
            k == fam.params.ell && ((n_high_pos == 1 && n_low_neg == 2 * k) ||
                                    (n_high_neg == 1 && n_low_pos == 2 * k));
        rep.diag_classification = gate(true, is_pm_M == exceptional);
        rep.diag_gap = gate(!t.same_sign && !is_pm_M, 2 * abs_sum >= Anchor(kj));
        rep.diag_cancellation = gate(!t.same_sign, cancellation >= 2 * Anchor(kj));
    }

    rep.mixed_gap =
        gate(!is_pm_M && fam.mixed_gap_guaranteed(), 4 * abs_sum >= Anchor(fam.k(j_min)));
    rep.mixed_cancellation = gate(!t.same_sign, cancellation >= 2 * Anchor(fam.k(j_min)));
    rep.mixed_max = gate(true, 2 * std::max(abs_sum, cancellation) >= max_abs);
    rep.triangle = gate(!t.same_sign, cancellation >= 2 * min_abs);
    return rep;
}

// ============================================================================
// Initial-data norm identity
// ============================================================================

/// The weight normalization makes sum_j gamma_j^q k_j^{mq} collapse to
/// sum_j j^{-(1+eps)}; both sides are reported together with the exact
/// norm of the initial data at (s, p, q) = (m, p, q) and its ratio to
/// rhs^{1/q}.
struct InitialNormIdentity {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_gap = 0.0;
    double norm = 0.0;
    double ratio = 0.0;
};

inline InitialNormIdentity initial_norm_identity(const SequenceFamily& fam) {
    const FamilyParams& prm = fam.params;
    const double m = prm.smoothness();
    std::vector<double> lhs_terms, rhs_terms;
    for (int j = fam.j_lo(); j <= fam.j_hi(); ++j) {
        lhs_terms.push_back(std::pow(fam.gamma(j), prm.q) *
                            std::pow(static_cast<double>(fam.k(j)), m * prm.q));
        rhs_terms.push_back(std::pow(static_cast<double>(j), -(1.0 + prm.epsilon)));
    }
    InitialNormIdentity out;
    out.lhs = sum_descending_magnitude(std::move(lhs_terms));
    out.rhs = sum_descending_magnitude(std::move(rhs_terms));
    out.rel_gap = std::abs(out.lhs - out.rhs) / out.rhs;
    out.norm = besov_norm_exact(initial_bumps(fam), NormParams{m, prm.p, prm.q});
    out.ratio = out.norm / std::pow(out.rhs, 1.0 / prm.q);
    return out;
}

// ============================================================================
// Serialization
// ============================================================================

/// Fixed-schema JSON: {ell, p, q, epsilon, delta, M, N, k_seq, gamma_seq},
/// in that order. Doubles round-trip exactly.
inline std::string family_to_json(const SequenceFamily& fam) {
    nlohmann::ordered_json j;
    j["ell"] = fam.params.ell;
    j["p"] = fam.params.p;
    j["q"] = fam.params.q;
    j["epsilon"] = fam.params.epsilon;
    j["delta"] = fam.params.delta;
    j["M"] = fam.params.M;
    j["N"] = fam.params.N;
    j["k_seq"] = fam.k_seq;
    j["gamma_seq"] = fam.gamma_seq;
    return j.dump(2) + "\n";
}

/// Parse and re-validate; structural flags are re-derived from the values.
inline SequenceFamily family_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("family JSON malformed: ") + e.what());
    }
    SequenceFamily fam;
    try {
        fam.params.ell = j.at("ell").get<int>();
        fam.params.p = j.at("p").get<double>();
        fam.params.q = j.at("q").get<double>();
        fam.params.epsilon = j.at("epsilon").get<double>();
        fam.params.delta = j.at("delta").get<double>();
        fam.params.M = j.at("M").get<std::int64_t>();
        fam.params.N = j.at("N").get<int>();
        fam.k_seq = j.at("k_seq").get<std::vector<std::int64_t>>();
        fam.gamma_seq = j.at("gamma_seq").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("family JSON missing or mistyped field: ") +
                                    e.what());
    }
    detail::finalize_family(fam);
    return fam;
}

}  // namespace nilab
