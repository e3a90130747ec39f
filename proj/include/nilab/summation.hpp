/// @file summation.hpp
/// @brief Compensated and pairwise summation with deterministic orderings.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace nilab {

/// Kahan-Neumaier compensated accumulator.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

    KahanSum& operator+=(double x) {
        add(x);
        return *this;
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Pairwise (cascade) sum of a contiguous range; O(log n) error growth.
inline double pairwise_sum(const double* data, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        KahanSum acc;
        for (std::size_t i = 0; i < n; ++i) acc.add(data[i]);
        return acc.value();
    }
    std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

/// Compensated sum after sorting by descending magnitude. Used where terms
/// span many orders of magnitude and the ordering must not depend on the
/// production schedule (series tails, norm aggregation).
inline double sum_descending_magnitude(std::vector<double> v) {
    std::sort(v.begin(), v.end(), [](double a, double b) {
        double fa = std::abs(a);
        double fb = std::abs(b);
        if (fa != fb) return fa > fb;
        return a > b;
    });
    KahanSum acc;
    for (double x : v) acc.add(x);
    return acc.value();
}

}  // namespace nilab
