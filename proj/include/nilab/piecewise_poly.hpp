/// @file piecewise_poly.hpp
/// @brief Exact piecewise polynomials and iterated indicator convolutions.
///
/// The n-fold convolution chi_{c_1} * ... * chi_{c_n} of width-2 indicator
/// bumps is a degree n-1 spline with breakpoints at Sum(c) + {-n, -n+2, .., n}.
/// It is built exactly: convolving with one more indicator maps a piecewise
/// polynomial f to F(x - c + 1) - F(x - c - 1) where F is the antiderivative.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nilab/summation.hpp"

namespace nilab {

/// Piecewise polynomial with local coefficients: on [breaks[i], breaks[i+1])
/// the value is Sum_d coef[i][d] * (x - breaks[i])^d. Zero outside.
class PiecewisePoly {
public:
    PiecewisePoly() = default;
    PiecewisePoly(std::vector<double> breaks, std::vector<std::vector<double>> coef)
        : breaks_(std::move(breaks)), coef_(std::move(coef)) {
        if (breaks_.size() != coef_.size() + 1) {
            throw std::invalid_argument("piece count must be breaks - 1");
        }
    }

    static PiecewisePoly indicator(double center) {
        return PiecewisePoly({center - 1.0, center + 1.0}, {{1.0}});
    }

    const std::vector<double>& breaks() const { return breaks_; }
    std::size_t piece_count() const { return coef_.empty() ? 0 : coef_.size(); }
    double support_lo() const { return breaks_.empty() ? 0.0 : breaks_.front(); }
    double support_hi() const { return breaks_.empty() ? 0.0 : breaks_.back(); }

    double operator()(double x) const {
        if (breaks_.empty() || x < breaks_.front() || x >= breaks_.back()) return 0.0;
        const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - breaks_.begin()) - 1;
        return eval_piece(i, x);
    }

    /// Continuous antiderivative vanishing at -infinity.
    PiecewisePoly antiderivative() const {
        std::vector<std::vector<double>> coef(coef_.size());
        double running = 0.0;
        for (std::size_t i = 0; i < coef_.size(); ++i) {
            const auto& c = coef_[i];
            std::vector<double> a(c.size() + 1, 0.0);
            a[0] = running;
            for (std::size_t d = 0; d < c.size(); ++d) {
                a[d + 1] = c[d] / static_cast<double>(d + 1);
            }
            coef[i] = a;
            const double w = breaks_[i + 1] - breaks_[i];
            double piece_mass = 0.0;
            for (std::size_t d = c.size(); d-- > 0;) {
                piece_mass = piece_mass * w + c[d] / static_cast<double>(d + 1);
            }
            running += piece_mass * w;
        }
        return PiecewisePoly(breaks_, std::move(coef));
    }

    double integral() const {
        KahanSum acc;
        for (std::size_t i = 0; i < coef_.size(); ++i) {
            const double w = breaks_[i + 1] - breaks_[i];
            double piece = 0.0;
            for (std::size_t d = coef_[i].size(); d-- > 0;) {
                piece = piece * w + coef_[i][d] / static_cast<double>(d + 1);
            }
            acc.add(piece * w);
        }
        return acc.value();
    }

    /// Convolution with the width-2 indicator centered at c.
    PiecewisePoly convolve_indicator(double c) const {
        const PiecewisePoly F = antiderivative();
        const double total = integral();

        std::vector<double> pts;
        pts.reserve(2 * breaks_.size());
        for (double b : breaks_) {
            pts.push_back(b + c - 1.0);
            pts.push_back(b + c + 1.0);
        }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end(),
                              [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                  pts.end());

        std::vector<std::vector<double>> coef;
        coef.reserve(pts.size() - 1);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            // (f * chi_c)(x) = F(x - c + 1) - F(x - c - 1); each term is one
            // polynomial piece of F on this interval, rebased to pts[i].
            std::vector<double> acc;
            add_shifted(acc, F, pts[i], c - 1.0, total, +1.0);
            add_shifted(acc, F, pts[i], c + 1.0, total, -1.0);
            coef.push_back(std::move(acc));
        }
        return PiecewisePoly(std::move(pts), std::move(coef));
    }

private:
    double eval_piece(std::size_t i, double x) const {
        const double dx = x - breaks_[i];
        double v = 0.0;
        for (std::size_t d = coef_[i].size(); d-- > 0;) v = v * dx + coef_[i][d];
        return v;
    }

    /// Accumulate sign * F(x - shift) as a polynomial in (x - base), valid for
    /// x in a piece interval where x - shift stays within one piece of F
    /// (guaranteed by the breakpoint union). Beyond F's support the value is
    /// the constant 0 (left) or `total` (right).
    static void add_shifted(std::vector<double>& acc, const PiecewisePoly& F,
                            double base, double shift, double total, double sign) {
        const double probe = base - shift;  // position in F-coordinates at x=base
        const auto& fb = F.breaks_;
        if (probe < fb.front() - 1e-12) {
            return;  // constant 0
        }
        if (probe >= fb.back() - 1e-12) {
            if (acc.empty()) acc.resize(1, 0.0);
            acc[0] += sign * total;
            return;
        }
        auto it = std::upper_bound(fb.begin(), fb.end(), probe + 1e-12);
        const std::size_t i = static_cast<std::size_t>(it - fb.begin()) - 1;
        // F piece i in local t = (x - shift) - fb[i]; substitute
        // t = (x - base) + (base - shift - fb[i]) and expand binomially.
        const double off = base - shift - fb[i];
        const auto& c = F.coef_[i];
        if (acc.size() < c.size()) acc.resize(c.size(), 0.0);
        for (std::size_t d = 0; d < c.size(); ++d) {
            double binom = 1.0;
            double offpow = 1.0;
            // contribution of c[d] * (u + off)^d with u = x - base
            for (std::size_t r = 0; r <= d; ++r) {
                const std::size_t ud = d - r;  // power of u
                acc[ud] += sign * c[d] * binom * offpow;
                binom *= static_cast<double>(d - r) / static_cast<double>(r + 1);
                offpow *= off;
            }
        }
    }

    std::vector<double> breaks_;
    std::vector<std::vector<double>> coef_;
};

/// Exact B-spline chi_{c_1} * ... * chi_{c_n}.
inline PiecewisePoly convolve_indicators(const std::vector<double>& centers) {
    if (centers.empty()) throw std::invalid_argument("need at least one center");
    PiecewisePoly out = PiecewisePoly::indicator(centers[0]);
    for (std::size_t i = 1; i < centers.size(); ++i) {
        out = out.convolve_indicator(centers[i]);
    }
    return out;
}

/// Pointwise sandwich chi(xi - Sum c) <= b(xi) <= 2^n chi((xi - Sum c)/n),
/// checked on a uniform grid across the support.
struct BoundsCheck {
    bool pass = true;
    double worst_lower = 0.0;  // most negative value of b - chi_lower
    double worst_upper = 0.0;  // most negative value of upper - b
};

inline BoundsCheck bspline_bounds_check(const PiecewisePoly& b, double center_sum,
                                        std::size_t n, std::size_t grid_points = 2001) {
    BoundsCheck res;
    const double lo = b.support_lo();
    const double hi = b.support_hi();
    const double upper = std::pow(2.0, static_cast<double>(n));
    for (std::size_t g = 0; g < grid_points; ++g) {
        const double xi =
            lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
        const double v = b(xi);
        const double lower =
            (std::abs(xi - center_sum) <= 1.0) ? 1.0 : 0.0;
        const double upper_here =
            (std::abs(xi - center_sum) <= static_cast<double>(n)) ? upper : 0.0;
        res.worst_lower = std::min(res.worst_lower, v - lower);
        res.worst_upper = std::min(res.worst_upper, upper_here - v);
    }
    // Interior grids can land epsilon outside a support edge; tolerate rounding.
    if (res.worst_lower < -1e-9 || res.worst_upper < -1e-9) res.pass = false;
    return res;
}

}  // namespace nilab
