/// @file common.hpp
/// @brief Shared constants, error types, and anchored frequency coordinates.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace nilab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Largest admissible frequency magnitude for generated sequences.
/// Kept exact in int64; tuple sums are formed in 128-bit integers.
inline constexpr std::int64_t kMagnitudeCap = std::int64_t(1) << 62;

/// Cap for the base-frequency search that enforces the divergence condition:
/// if the condition cannot be met with a base below this, generation reports
/// a capacity error advising a smaller N or delta.
inline constexpr std::int64_t kSeedCap = std::int64_t(1) << 60;

/// Signed 128-bit anchor: tuple sums of symbols near the magnitude cap exceed
/// int64, so anchored coordinates carry their integer part at full width.
using Anchor = __int128;

inline double anchor_to_double(Anchor a) {
    return static_cast<double>(a);
}

inline Anchor anchor_abs(Anchor a) { return a < 0 ? -a : a; }

/// Exponent magnitude beyond which e^{-x} is treated as an exact, flagged zero.
inline constexpr double kUnderflowExponent = 700.0;

/// Requested tolerance could not be certified with the given budget.
/// Carries the best estimate achieved so the caller can report it.
class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Construction is impossible within the magnitude cap (advises smaller N or delta).
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A frequency written as an exact integer anchor plus a small real offset.
/// Keeps geometry exact when anchors exceed 2^53: anchor sums stay in integer
/// arithmetic and only the O(1) offsets live in floating point.
struct FreqCoord {
    Anchor anchor = 0;
    double offset = 0.0;

    double value() const { return anchor_to_double(anchor) + offset; }
    double abs_value() const {
        // |anchor| > 2 dominates any admissible offset, so the sign of the
        // anchor decides the branch without forming the rounded sum first.
        if (anchor > 2) return anchor_to_double(anchor) + offset;
        if (anchor < -2) return -anchor_to_double(anchor) - offset;
        return std::abs(anchor_to_double(anchor) + offset);
    }
};

/// e^{-x} for x >= 0 with the flagged-underflow policy: exponents past
/// kUnderflowExponent produce an exact zero and report it via *flagged.
inline double exp_neg(double x, bool* flagged = nullptr) {
    if (x > kUnderflowExponent) {
        if (flagged) *flagged = true;
        return 0.0;
    }
    return std::exp(-x);
}

/// (e^z - 1)/z, stable near z = 0.
inline double phi1(double z) {
    if (std::abs(z) < 1e-8) return 1.0 + 0.5 * z;
    return std::expm1(z) / z;
}

}  // namespace nilab
