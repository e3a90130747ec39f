/// @file quadrature.hpp
/// @brief Gauss-Legendre rules with composite and breakpoint-aware drivers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "nilab/common.hpp"
#include "nilab/summation.hpp"

namespace nilab {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
/// Computed once per order by Newton iteration on P_n and cached.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    static const GaussLegendre& get(int n) {
        static std::map<int, GaussLegendre> cache;
        static std::mutex mu;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it != cache.end()) return it->second;
        return cache.emplace(n, build(n)).first->second;
    }

private:
    static GaussLegendre build(int n) {
        if (n < 1) throw std::invalid_argument("Gauss-Legendre order must be positive");
        GaussLegendre rule;
        rule.nodes.resize(static_cast<std::size_t>(n));
        rule.weights.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(kPiLocal * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0;
                double p1 = x;
                for (int j = 2; j <= n; ++j) {
                    double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) {
                    p0 = 1.0;
                    p1 = x;
                    for (int j = 2; j <= n; ++j) {
                        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n * (x * p1 - p0) / (x * x - 1.0);
                    break;
                }
            }
            double w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule.nodes[static_cast<std::size_t>(i)] = -x;
            rule.weights[static_cast<std::size_t>(i)] = w;
            rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
            rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
        }
        if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
        return rule;
    }

    static constexpr double kPiLocal = 3.141592653589793238462643383279502884;
};

/// Single-panel Gauss-Legendre integral of f over [a, b].
template <class F>
double gl_integrate(F&& f, double a, double b, int n) {
    const GaussLegendre& rule = GaussLegendre::get(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    KahanSum acc;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc.add(rule.weights[i] * f(mid + half * rule.nodes[i]));
    }
    return half * acc.value();
}

/// Composite rule: [a, b] split into equal panels no wider than max_width.
template <class F>
double gl_composite(F&& f, double a, double b, int n, double max_width) {
    if (!(b > a)) return 0.0;
    const double len = b - a;
    const std::size_t panels =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / max_width)));
    const double w = len / static_cast<double>(panels);
    KahanSum acc;
    for (std::size_t p = 0; p < panels; ++p) {
        acc.add(gl_integrate(f, a + w * static_cast<double>(p),
                             a + w * static_cast<double>(p + 1), n));
    }
    return acc.value();
}

/// Composite rule that never integrates across the supplied breakpoints.
/// Breakpoints outside (a, b) are ignored; duplicates are merged.
template <class F>
double gl_piecewise(F&& f, double a, double b, std::vector<double> breaks, int n,
                    double max_width) {
    if (!(b > a)) return 0.0;
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    KahanSum acc;
    double lo = a;
    for (double x : breaks) {
        if (x <= lo) continue;
        double hi = std::min(x, b);
        if (hi > lo) acc.add(gl_composite(f, lo, hi, n, max_width));
        lo = hi;
        if (lo >= b) break;
    }
    return acc.value();
}

/// Breakpoints for a geometric far-field mesh: a, a*r, a*r^2, ..., capped at b.
inline std::vector<double> geometric_breaks(double a, double b, double ratio) {
    std::vector<double> out;
    for (double x = a; x < b; x *= ratio) out.push_back(x);
    return out;
}

}  // namespace nilab
