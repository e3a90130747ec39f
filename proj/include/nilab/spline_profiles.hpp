/// @file spline_profiles.hpp
/// @brief Frequency-side profiles, the decay semigroup, and the Duhamel map.
///
/// A SpectralProfile is a finite sum of compactly supported pieces, each with
/// an arbitrary complex amplitude function. Applying the decay semigroup
/// multiplies by exp(-2 pi t |xi|); pieces driven below the double underflow
/// threshold are replaced by exact zeros and flagged rather than silently
/// denormalized.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nilab/common.hpp"
#include "nilab/quadrature.hpp"
#include "nilab/rng.hpp"

namespace nilab {

using Complex = std::complex<double>;

struct ProfilePiece {
    double lo = 0.0;
    double hi = 0.0;
    std::function<Complex(double)> amp;
    bool flagged_zero = false;
};

class SpectralProfile {
public:
    SpectralProfile() = default;
    explicit SpectralProfile(std::vector<ProfilePiece> pieces) : pieces_(std::move(pieces)) {
        for (const auto& p : pieces_) {
            if (!(p.lo < p.hi)) throw std::invalid_argument("piece support must be nonempty");
        }
    }

    const std::vector<ProfilePiece>& pieces() const { return pieces_; }

    Complex operator()(double xi) const {
        Complex acc = 0.0;
        for (const auto& p : pieces_) {
            if (p.flagged_zero) continue;
            if (xi >= p.lo && xi < p.hi) acc += p.amp(xi);
        }
        return acc;
    }

    double support_radius() const {
        double r = 0.0;
        for (const auto& p : pieces_) {
            r = std::max(r, std::max(std::abs(p.lo), std::abs(p.hi)));
        }
        return r;
    }

    std::size_t flagged_count() const {
        std::size_t n = 0;
        for (const auto& p : pieces_) n += p.flagged_zero ? 1u : 0u;
        return n;
    }

    /// Sorted union of all piece endpoints (integration breakpoints).
    std::vector<double> breakpoints() const {
        std::vector<double> b;
        b.reserve(2 * pieces_.size());
        for (const auto& p : pieces_) {
            b.push_back(p.lo);
            b.push_back(p.hi);
        }
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

private:
    std::vector<ProfilePiece> pieces_;
};

/// Sum of width-2 indicator bumps: amplitude gamma on [center-1, center+1).
inline SpectralProfile profile_from_bumps(
    const std::vector<std::pair<double, double>>& gamma_center) {
    std::vector<ProfilePiece> pieces;
    pieces.reserve(gamma_center.size());
    for (const auto& [gamma, center] : gamma_center) {
        ProfilePiece p;
        p.lo = center - 1.0;
        p.hi = center + 1.0;
        p.amp = [gamma](double) { return Complex(gamma, 0.0); };
        pieces.push_back(std::move(p));
    }
    return SpectralProfile(std::move(pieces));
}

/// Real even initial data with bumps at +/-k: gamma (chi_k + chi_{-k}).
inline SpectralProfile oscillatory_pair(double gamma, double k) {
    return profile_from_bumps({{gamma, k}, {gamma, -k}});
}

inline SpectralProfile profile_sum(const SpectralProfile& a, const SpectralProfile& b) {
    std::vector<ProfilePiece> pieces = a.pieces();
    for (const auto& p : b.pieces()) pieces.push_back(p);
    return SpectralProfile(std::move(pieces));
}

inline SpectralProfile profile_scale(const SpectralProfile& a, Complex factor) {
    std::vector<ProfilePiece> pieces;
    pieces.reserve(a.pieces().size());
    for (const auto& p : a.pieces()) {
        ProfilePiece q = p;
        auto inner = p.amp;
        q.amp = [inner, factor](double xi) { return factor * inner(xi); };
        pieces.push_back(std::move(q));
    }
    return SpectralProfile(std::move(pieces));
}

// ============================================================================
// Decay semigroup
// ============================================================================

/// Multiply by exp(-2 pi t |xi|). Pieces whose entire support lies beyond the
/// underflow threshold become flagged zeros.
inline SpectralProfile semigroup_apply(const SpectralProfile& f, double t) {
    if (t < 0.0) throw std::invalid_argument("semigroup time must be nonnegative");
    std::vector<ProfilePiece> pieces;
    pieces.reserve(f.pieces().size());
    for (const auto& p : f.pieces()) {
        ProfilePiece q;
        q.lo = p.lo;
        q.hi = p.hi;
        if (p.flagged_zero) {
            q.flagged_zero = true;
            q.amp = [](double) { return Complex(0.0, 0.0); };
            pieces.push_back(std::move(q));
            continue;
        }
        const double min_abs =
            (p.lo <= 0.0 && p.hi >= 0.0) ? 0.0 : std::min(std::abs(p.lo), std::abs(p.hi));
        if (kTwoPi * t * min_abs > kUnderflowExponent) {
            q.flagged_zero = true;
            q.amp = [](double) { return Complex(0.0, 0.0); };
        } else {
            auto inner = p.amp;
            q.amp = [inner, t](double xi) {
                bool flagged = false;
                const double decay = exp_neg(kTwoPi * t * std::abs(xi), &flagged);
                return flagged ? Complex(0.0, 0.0) : inner(xi) * decay;
            };
        }
        pieces.push_back(std::move(q));
    }
    return SpectralProfile(std::move(pieces));
}

// ============================================================================
// Duhamel map
// ============================================================================

/// E(F)(xi, t) = integral over tau in [0, t] of exp(-2 pi (t - tau)|xi|)
/// F(xi, tau) d tau, by Gauss-Legendre in tau.
inline Complex duhamel_E(const std::function<Complex(double, double)>& forcing, double xi,
                         double t, int time_nodes = 64) {
    if (t < 0.0) throw std::invalid_argument("duhamel time must be nonnegative");
    if (t == 0.0) return Complex(0.0, 0.0);
    const auto& rule = GaussLegendre::get(time_nodes);
    const double half = 0.5 * t;
    Complex acc = 0.0;
    const double a = kTwoPi * std::abs(xi);
    for (int i = 0; i < time_nodes; ++i) {
        const double tau = half * (rule.nodes[i] + 1.0);
        bool flagged = false;
        const double decay = exp_neg(a * (t - tau), &flagged);
        if (flagged) continue;
        acc += rule.weights[i] * decay * forcing(xi, tau);
    }
    return acc * half;
}

/// Closed form of duhamel_E for the separable forcing a(xi) exp(-2 pi tau b):
/// E = a(xi) exp(-2 pi t |xi|) t phi1(2 pi (|xi| - b) t). Used as a contract
/// oracle for the quadrature path.
inline Complex duhamel_E_exponential_closed(Complex amplitude, double xi, double b, double t) {
    const double a = kTwoPi * std::abs(xi);
    bool flagged = false;
    const double decay = exp_neg(a * t, &flagged);
    if (flagged) {
        // exp(-a t) underflowed; fall back to the other factorization
        bool f2 = false;
        const double decay_b = exp_neg(kTwoPi * b * t, &f2);
        if (f2) return Complex(0.0, 0.0);
        return amplitude * decay_b * t * phi1((kTwoPi * b - a) * t);
    }
    return amplitude * decay * t * phi1((a - kTwoPi * b) * t);
}

/// Max Hermitian defect |f(-xi) - conj(f(xi))| over pinned random samples.
inline double hermitian_defect(const SpectralProfile& f, int samples, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double r = f.support_radius() + 1.0;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double xi = rng.next_range(-r, r);
        worst = std::max(worst, std::abs(f(-xi) - std::conj(f(xi))));
    }
    return worst;
}

}  // namespace nilab
