/// @file second_iterate.hpp
/// @brief Fourier-side assembly of the second-iterate components: kernel-
///        weighted box integrals per frequency tuple, diagonal/off-diagonal
///        bucketing, and Besov norms of the assembled profiles.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nilab/besov_norm.hpp"
#include "nilab/common.hpp"
#include "nilab/gamma_kernel.hpp"
#include "nilab/quadrature.hpp"
#include "nilab/sequences.hpp"
#include "nilab/summation.hpp"
#include "nilab/threading.hpp"

namespace nilab {

// ============================================================================
// Quadrature budget
// ============================================================================

struct IterateQuadrature {
    int nodes_per_axis = 24;  ///< Gauss-Legendre nodes per difference variable
    int norm_nodes = 24;      ///< nodes per seam segment in norm integrals
    bool alt_prefactor = false;  ///< use (-1)^k/(2k+1) instead of (-1)^k/(pi(2k+1))

    void validate() const {
        if (nodes_per_axis < 2 || norm_nodes < 2)
            throw std::invalid_argument("quadrature needs at least 2 nodes per axis");
    }
};

/// Smoothing window applied to a forcing frequency pair (a, b):
///   integral over tau in [0, length] of e^{-a(length-tau)} e^{-b(tau+delay)}.
/// delay > 0 expresses a forcing that has already decayed for that long,
/// which is what the two-step composition of the mild solution needs.
struct DuhamelSpan {
    double length = 0.0;
    double forcing_delay = 0.0;
};

namespace detail {

/// Closed form of the DuhamelSpan integral. The difference d = a - b is
/// supplied by the caller, who can compute it exactly even when a and b are
/// both astronomically large; forming b - a here in doubles would lose the
/// exponent to rounding. Both factorizations of the result are available,
/// and the one whose leading exponential has the smaller exponent is chosen
/// so phi1 always sees a non-positive argument.
inline double duhamel_window(double length, double a, double d, double delay) {
    if (length < 0.0 || delay < 0.0)
        throw std::invalid_argument("smoothing window needs nonnegative times");
    if (length == 0.0) return 0.0;
    const double b = a - d;
    const double lead = (d <= 0.0 ? a : b) * length + b * delay;
    const double z = -std::abs(d) * length;
    return exp_neg(lead) * length * phi1(z);
}

/// Integral over the slab {(va, vb) in [-1,1]^2 : r - va - vb in [-1,1]} of
/// f(va, vb, r - va - vb). The inner window's clipping switches exactly at
/// va = r, so the outer integral is split there; each piece is smooth.
template <class F>
double triple_slab(double r, int nodes, F&& f) {
    const double lo = std::max(-1.0, r - 2.0);
    const double hi = std::min(1.0, r + 2.0);
    if (!(hi > lo)) return 0.0;

    const auto inner = [&](double va) -> double {
        const double blo = std::max(-1.0, r - 1.0 - va);
        const double bhi = std::min(1.0, r + 1.0 - va);
        if (!(bhi > blo)) return 0.0;
        return gl_integrate([&](double vb) { return f(va, vb, r - va - vb); }, blo, bhi,
                            nodes);
    };

    KahanSum acc;
    if (r > lo && r < hi) {
        acc.add(gl_integrate(inner, lo, r, nodes));
        acc.add(gl_integrate(inner, r, hi, nodes));
    } else {
        acc.add(gl_integrate(inner, lo, hi, nodes));
    }
    return acc.value();
}

inline double sign_of(std::int64_t v) { return v < 0 ? -1.0 : 1.0; }

}  // namespace detail

// ============================================================================
// R-terms
// ============================================================================

/// One kernel-weighted convolution term: the tuple of bump centers, its exact
/// sum, and the short-circuit flag for same-sign tuples (the kernel vanishes
/// identically on their box, a polynomial identity, so no quadrature runs).
/// The term's frequency support is [sum - (2k+1), sum + (2k+1)].
struct RTerm {
    std::vector<std::int64_t> entries;
    Anchor sum = 0;
    int k = 0;
    bool vanishes = false;

    double support_lo() const { return anchor_to_double(sum) - (2 * k + 1); }
    double support_hi() const { return anchor_to_double(sum) + (2 * k + 1); }
};

/// Build an RTerm from raw centers. Width must be odd: 3 or 5 is supported,
/// 7 and up exceeds the tensor quadrature budget. Nonvanishing terms must
/// keep their support away from zero frequency; admissible families
/// guarantee |sum| >= M > 2k+2 through the sum lemmas.
inline RTerm make_r_term(std::vector<std::int64_t> entries) {
    const std::size_t w = entries.size();
    if (w < 3 || w % 2 == 0) throw std::invalid_argument("tuple width must be odd and >= 3");
    if (w > 5)
        throw CapacityError("tuple width beyond 5 exceeds the tensor quadrature budget (2k <= 4)");
    RTerm term;
    term.k = static_cast<int>((w - 1) / 2);
    bool all_pos = true;
    bool all_neg = true;
    Anchor sum = 0;
    for (const std::int64_t c : entries) {
        sum += c;
        all_pos = all_pos && c > 0;
        all_neg = all_neg && c < 0;
    }
    term.entries = std::move(entries);
    term.sum = sum;
    term.vanishes = all_pos || all_neg;
    if (!term.vanishes && anchor_abs(sum) <= Anchor(2 * term.k + 1))
        throw std::domain_error("tuple sum too close to zero: support window would reach 0");
    return term;
}

inline RTerm assemble_r_term(const FrequencyTuple& t) {
    return make_r_term(t.entries);
}

namespace detail {

/// Shared box quadrature: integrates Gamma(u) * tau_factor(|xi|, |xi|-sum|u|)
/// over the box slice {u in Prod [c_i - 1, c_i + 1] : Sum u = xi} at
/// xi = sum + off, then multiplies by 2 pi xi. The difference
/// |xi| - Sum_i |u_i| is assembled from an exact 128-bit base so no
/// catastrophic cancellation occurs at frequencies near 2^62.
template <class TauFactor>
double r_box_value(const RTerm& term, double off, int nodes, TauFactor&& tau_factor) {
    if (term.vanishes) return 0.0;
    const int w = 2 * term.k + 1;
    if (std::abs(off) >= static_cast<double>(w)) return 0.0;

    const double sgn = term.sum < 0 ? -1.0 : 1.0;
    const double abs_sum = anchor_to_double(anchor_abs(term.sum));
    const double xi_abs = abs_sum + sgn * off;
    const double xi = sgn * xi_abs;

    Anchor base = anchor_abs(term.sum);
    for (const std::int64_t c : term.entries) base -= anchor_abs(Anchor(c));
    const double d_base = anchor_to_double(base) + sgn * off;

    std::vector<FreqCoord> coords(static_cast<std::size_t>(w));
    for (int i = 0; i < w; ++i) coords[static_cast<std::size_t>(i)].anchor = term.entries[static_cast<std::size_t>(i)];

    const auto node_value = [&](double* v) -> double {
        double d = d_base;
        for (int i = 0; i < w; ++i) {
            coords[static_cast<std::size_t>(i)].offset = v[i];
            d -= detail::sign_of(term.entries[static_cast<std::size_t>(i)]) * v[i];
        }
        const double g = gamma_closed_anchored(coords.data(), coords.size());
        if (g == 0.0) return 0.0;
        return g * tau_factor(xi_abs, d);
    };

    double value = 0.0;
    if (term.k == 1) {
        value = detail::triple_slab(off, nodes, [&](double v1, double v2, double v3) {
            double v[3] = {v1, v2, v3};
            return node_value(v);
        });
    } else {
        value = gl_integrate(
            [&](double v1) {
                return gl_integrate(
                    [&](double v2) {
                        return detail::triple_slab(
                            off - v1 - v2, nodes, [&](double v3, double v4, double v5) {
                                double v[5] = {v1, v2, v3, v4, v5};
                                return node_value(v);
                            });
                    },
                    -1.0, 1.0, nodes);
            },
            -1.0, 1.0, nodes);
    }
    return kTwoPi * xi * value;
}

}  // namespace detail

/// Raw convolution value R(xi, tau) at xi = sum + off, a single relaxation
/// time tau applied to every forcing frequency.
inline double r_term_value(const RTerm& term, double off, double tau,
                           const IterateQuadrature& quad) {
    quad.validate();
    if (tau < 0.0) throw std::invalid_argument("relaxation time must be nonnegative");
    return detail::r_box_value(term, off, quad.nodes_per_axis,
                               [&](double xi_abs, double d) {
                                   return exp_neg(kTwoPi * tau * (xi_abs - d));
                               });
}

/// Smoothed value E(R)(xi) at xi = sum + off: the mild-solution time integral
/// is exact per quadrature node (closed form), so no time discretization
/// error enters.
inline double r_term_duhamel(const RTerm& term, double off, const DuhamelSpan& span,
                             const IterateQuadrature& quad) {
    quad.validate();
    return detail::r_box_value(term, off, quad.nodes_per_axis,
                               [&](double xi_abs, double d) {
                                   return detail::duhamel_window(
                                       span.length, kTwoPi * xi_abs, kTwoPi * d,
                                       span.forcing_delay);
                               });
}

// ============================================================================
// Component assembly
// ============================================================================

/// One term inside a merged support patch: the term itself, its product of
/// profile weights, and its integer offset from the patch anchor.
struct GroupMember {
    RTerm term;
    double weight = 1.0;
    double rel = 0.0;
};

/// A cluster of terms whose supports share one patch of positive frequency.
/// Clusters are merged whenever neighboring tuple sums are within 2(2k+1),
/// so patches inside one bucket never overlap.
struct PatchGroup {
    SupportPatch patch;
    std::vector<GroupMember> members;
};

/// Assembled profile of one component order k: terms bucketed into the
/// resonant diagonal part, the remaining diagonal part (k = ell only), and
/// the off-diagonal part. Only tuples with positive sum are stored; the
/// mirrored half is implied by evenness and restored by the hermitian fold.
/// Counts cover the full two-sided enumeration.
struct IterateComponent {
    SequenceFamily family;
    int k = 0;
    double t = 0.0;
    IterateQuadrature quad;
    double prefactor = 0.0;
    bool resonant_only = false;

    std::vector<PatchGroup> resonant;       ///< diagonal; sum = +-M when k = ell
    std::vector<PatchGroup> diagonal_rest;  ///< k = ell: diagonal with sum != +-M
    std::vector<PatchGroup> off_diagonal;

    std::size_t n_same_sign = 0;
    std::size_t n_resonant = 0;
    std::size_t n_diagonal_rest = 0;
    std::size_t n_off_diagonal = 0;

    bool time_window_ok = false;  ///< t*M <= 1 and t*k_N > 1 (lower-bound regime)
};

namespace detail {

/// Merge sorted (sum, term, weight) triples into patch groups: a new group
/// starts whenever the gap to the previous sum exceeds 2(2k+1). Breaks are
/// placed at every interior integer offset; all geometry kinks of the box
/// slices and of the window clipping land there.
inline std::vector<PatchGroup> build_groups(
    std::vector<std::pair<Anchor, RTerm>>&& terms, const std::vector<double>& weights, int k) {
    std::vector<PatchGroup> groups;
    const Anchor radius = 2 * k + 1;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const Anchor s = terms[i].first;
        if (groups.empty() || s - groups.back().members.back().term.sum > 2 * radius) {
            PatchGroup g;
            g.patch.anchor = s;
            g.patch.lo = -static_cast<double>(radius);
            groups.push_back(std::move(g));
        }
        PatchGroup& g = groups.back();
        GroupMember m;
        m.term = std::move(terms[i].second);
        m.weight = weights[i];
        m.rel = anchor_to_double(s - g.patch.anchor);
        g.members.push_back(std::move(m));
    }
    for (PatchGroup& g : groups) {
        g.patch.hi = g.members.back().rel + static_cast<double>(radius);
        for (double b = g.patch.lo + 1.0; b < g.patch.hi - 0.5; b += 1.0)
            g.patch.breaks.push_back(b);
    }
    return groups;
}

inline double component_prefactor(int k, bool alt) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return alt ? sign / (2.0 * k + 1.0) : sign / (kPi * (2.0 * k + 1.0));
}

}  // namespace detail

/// Assemble the order-k component profile of the second iterate at time t.
/// Tuples are visited in lexicographic enumeration order; within a bucket
/// they are stably sorted by sum, so the stored reduction order (and with it
/// every later evaluation) is independent of any parallelism.
inline IterateComponent assemble_component(const SequenceFamily& fam, int k, double t,
                                           const IterateQuadrature& quad = {},
                                           TupleMode mode = TupleMode::kAll) {
    quad.validate();
    if (k < 1 || k > fam.params.ell) throw std::invalid_argument("component order must satisfy 1 <= k <= ell");
    if (t < 0.0) throw std::invalid_argument("time must be nonnegative");

    IterateComponent comp;
    comp.family = fam;
    comp.k = k;
    comp.t = t;
    comp.quad = quad;
    comp.prefactor = detail::component_prefactor(k, quad.alt_prefactor);
    comp.resonant_only = (mode == TupleMode::kDiagonal);

    const bool top_order = (k == fam.params.ell);
    const Anchor big_m = fam.params.M;

    // bucket 0: resonant diagonal, 1: diagonal rest, 2: off-diagonal
    std::vector<std::pair<Anchor, RTerm>> kept[3];
    std::vector<double> kept_w[3];

    enumerate_tuples(fam, k, mode, [&](const FrequencyTuple& tup) {
        if (tup.same_sign) {
            ++comp.n_same_sign;
            return;
        }
        int bucket;
        if (tup.diagonal) {
            bucket = (top_order && anchor_abs(tup.sum) != big_m) ? 1 : 0;
        } else {
            bucket = 2;
        }
        if (bucket == 0) ++comp.n_resonant;
        if (bucket == 1) ++comp.n_diagonal_rest;
        if (bucket == 2) ++comp.n_off_diagonal;
        if (tup.sum <= 0) return;  // mirror carried by the hermitian fold
        double w = 1.0;
        for (const int j : tup.indices) w *= fam.gamma(j);
        kept[bucket].emplace_back(tup.sum, assemble_r_term(tup));
        kept_w[bucket].push_back(w);
    });

    const auto finish = [&](int b) {
        std::vector<std::size_t> order(kept[b].size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return kept[b][x].first < kept[b][y].first;
        });
        std::vector<std::pair<Anchor, RTerm>> terms;
        std::vector<double> weights;
        terms.reserve(order.size());
        weights.reserve(order.size());
        for (const std::size_t i : order) {
            terms.push_back(std::move(kept[b][i]));
            weights.push_back(kept_w[b][i]);
        }
        return detail::build_groups(std::move(terms), weights, k);
    };
    comp.resonant = finish(0);
    comp.diagonal_rest = finish(1);
    comp.off_diagonal = finish(2);

    comp.time_window_ok = (t * static_cast<double>(fam.params.M) <= 1.0) &&
                          (t * static_cast<double>(fam.k_seq.front()) > 1.0);
    return comp;
}

/// Diagonal-only assembly restricted to the resonant sums +-M at the top
/// order k = ell. This is the piece whose norm carries the growth lower
/// bound, and it stays cheap even for long families.
inline IterateComponent assemble_resonant_component(const SequenceFamily& fam, double t,
                                                    const IterateQuadrature& quad = {}) {
    IterateComponent comp =
        assemble_component(fam, fam.params.ell, t, quad, TupleMode::kDiagonal);
    comp.diagonal_rest.clear();
    comp.resonant_only = true;
    return comp;
}

/// Value of one patch group's profile at offset off from its patch anchor.
/// Fixed member order; the sum is compensated.
inline double group_value(const IterateComponent& comp, const PatchGroup& group, double off) {
    KahanSum acc;
    const DuhamelSpan span{comp.t, 0.0};
    for (const GroupMember& m : group.members) {
        acc.add(m.weight * r_term_duhamel(m.term, off - m.rel, span, comp.quad));
    }
    return acc.value();
}

// ============================================================================
// Norms and summaries
// ============================================================================

/// Measured Besov norms of the assembled buckets plus the closed-form
/// comparison sums the growth analysis is checked against. For k = ell the
/// off-diagonal norm is reported in hf2_norm and hf_norm stays 0; for k < ell
/// it is hf_norm. A violated time window only flags, never blocks.
struct ComponentNorms {
    double j_norm = 0.0;
    double hf_norm = 0.0;
    double hf1_norm = 0.0;
    double hf2_norm = 0.0;

    double resonant_weight_sum = 0.0;  ///< sum_j gamma_j^{2l+1} k_j^{2l-1}
    double linear_power_sum = 0.0;     ///< sum_j gamma_j k_j^{(2k-1)/(2k+1)}
    double besov_power_sum = 0.0;      ///< (sum_j gamma_j^{(2k+1)q} k_j^{(2k-2+m)q})^{1/q}
    bool time_window_ok = false;
};

namespace detail {

inline double bucket_norm(const IterateComponent& comp, const std::vector<PatchGroup>& groups,
                          const NormParams& prm, int threads) {
    if (groups.empty()) return 0.0;
    auto pieces = parallel_map_indexed(groups.size(), threads, [&](std::size_t i) {
        const PatchGroup& g = groups[i];
        const auto eval = [&](const SupportPatch&, double off) {
            return std::abs(group_value(comp, g, off));
        };
        return detail::anchored_patch_parts(g.patch, eval, prm, comp.quad.norm_nodes, 2.0);
    });
    std::vector<std::pair<int, double>> parts;
    for (const auto& piece : pieces) parts.insert(parts.end(), piece.begin(), piece.end());
    return aggregate_blocks(parts, prm);
}

/// exp(a log gamma_j + b log k_j) summed in descending magnitude; the raw
/// powers overflow doubles long before the combined exponent does.
inline double log_power_sum(const SequenceFamily& fam, double a, double b) {
    std::vector<double> terms;
    terms.reserve(fam.k_seq.size());
    for (int j = fam.j_lo(); j <= fam.j_hi(); ++j) {
        terms.push_back(std::exp(a * std::log(fam.gamma(j)) +
                                 b * std::log(static_cast<double>(fam.k(j)))));
    }
    return sum_descending_magnitude(std::move(terms));
}

}  // namespace detail

inline ComponentNorms measure_component_norms(const IterateComponent& comp,
                                              const NormParams& prm, int threads = 0) {
    prm.validate();
    ComponentNorms out;
    const double res = detail::bucket_norm(comp, comp.resonant, prm, threads);
    const double rest = detail::bucket_norm(comp, comp.diagonal_rest, prm, threads);
    const double off = detail::bucket_norm(comp, comp.off_diagonal, prm, threads);

    out.j_norm = res;
    if (comp.k == comp.family.params.ell) {
        out.hf1_norm = rest;
        out.hf2_norm = off;
    } else {
        out.hf_norm = off;
    }

    const FamilyParams& p = comp.family.params;
    const double ell = static_cast<double>(p.ell);
    const double kk = static_cast<double>(comp.k);
    const double m = p.smoothness();
    out.resonant_weight_sum = detail::log_power_sum(comp.family, 2.0 * ell + 1.0, 2.0 * ell - 1.0);
    out.linear_power_sum =
        detail::log_power_sum(comp.family, 1.0, (2.0 * kk - 1.0) / (2.0 * kk + 1.0));
    out.besov_power_sum = std::pow(
        detail::log_power_sum(comp.family, (2.0 * kk + 1.0) * p.q, (2.0 * kk - 2.0 + m) * p.q),
        1.0 / p.q);
    out.time_window_ok = comp.time_window_ok;
    return out;
}

/// Norm of the full assembled profile (all buckets summed before |.|), for
/// triangle-consistency checks against the per-bucket norms. Buckets can
/// share frequency patches, so their members are re-clustered jointly.
inline double measure_total_norm(const IterateComponent& comp, const NormParams& prm,
                                 int threads = 0) {
    prm.validate();
    std::vector<std::tuple<Anchor, RTerm, double>> all;
    for (const auto* b : {&comp.resonant, &comp.diagonal_rest, &comp.off_diagonal}) {
        for (const PatchGroup& g : *b) {
            for (const GroupMember& m : g.members) {
                all.emplace_back(g.patch.anchor + Anchor(std::llround(m.rel)), m.term,
                                 m.weight);
            }
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
        return std::get<0>(x) < std::get<0>(y);
    });
    std::vector<std::pair<Anchor, RTerm>> terms;
    std::vector<double> weights;
    terms.reserve(all.size());
    weights.reserve(all.size());
    for (auto& [s, term, w] : all) {
        terms.emplace_back(s, std::move(term));
        weights.push_back(w);
    }
    IterateComponent merged = comp;
    merged.resonant = detail::build_groups(std::move(terms), weights, comp.k);
    merged.diagonal_rest.clear();
    merged.off_diagonal.clear();
    return detail::bucket_norm(merged, merged.resonant, prm, threads);
}

/// Physical-space value of the component field at position x: the inverse
/// transform of the assembled even real profile, prefactor applied. Only
/// meaningful for small-anchor families (cross-validation against the
/// physical-space route); oscillation is resolved by capping panel width
/// at 1/(4(1+|x|)).
inline double component_field_value(const IterateComponent& comp, double x, int nodes = 16) {
    const double width = 0.25 / (1.0 + std::abs(x));
    KahanSum acc;
    const auto add_bucket = [&](const std::vector<PatchGroup>& groups) {
        for (const PatchGroup& g : groups) {
            const double anchor_d = anchor_to_double(g.patch.anchor);
            acc.add(gl_piecewise(
                [&](double off) {
                    return group_value(comp, g, off) *
                           std::cos(kTwoPi * x * (anchor_d + off));
                },
                g.patch.lo, g.patch.hi, g.patch.breaks, nodes, width));
        }
    };
    add_bucket(comp.resonant);
    add_bucket(comp.diagonal_rest);
    add_bucket(comp.off_diagonal);
    return 2.0 * comp.prefactor * acc.value();
}

/// Deterministic JSON summary: norms, counts, and the comparison sums.
/// Timing never appears here; run logs carry it so summaries stay
/// byte-identical across repeated runs.
inline nlohmann::ordered_json component_summary_json(const IterateComponent& comp,
                                                     const ComponentNorms& norms) {
    nlohmann::ordered_json j;
    j["k"] = comp.k;
    j["ell"] = comp.family.params.ell;
    j["t"] = comp.t;
    j["prefactor"] = comp.prefactor;
    j["resonant_only"] = comp.resonant_only;
    nlohmann::ordered_json counts;
    counts["same_sign"] = comp.n_same_sign;
    counts["resonant"] = comp.n_resonant;
    counts["diagonal_rest"] = comp.n_diagonal_rest;
    counts["off_diagonal"] = comp.n_off_diagonal;
    std::size_t kept = 0;
    for (const auto* b : {&comp.resonant, &comp.diagonal_rest, &comp.off_diagonal})
        for (const PatchGroup& g : *b) kept += g.members.size();
    counts["kept_terms"] = kept;
    counts["patch_groups"] =
        comp.resonant.size() + comp.diagonal_rest.size() + comp.off_diagonal.size();
    j["counts"] = std::move(counts);
    nlohmann::ordered_json n;
    n["j_norm"] = norms.j_norm;
    n["hf_norm"] = norms.hf_norm;
    n["hf1_norm"] = norms.hf1_norm;
    n["hf2_norm"] = norms.hf2_norm;
    n["resonant_weight_sum"] = norms.resonant_weight_sum;
    n["linear_power_sum"] = norms.linear_power_sum;
    n["besov_power_sum"] = norms.besov_power_sum;
    n["time_window_ok"] = norms.time_window_ok;
    j["norms"] = std::move(n);
    return j;
}

}  // namespace nilab
