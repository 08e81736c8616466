// Small numeric helpers shared across the library.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace fpld {

// Shape values with magnitude below this threshold are treated as zero and
// evaluated through the logarithmic limit (p^s - 1)/s -> log p.
inline constexpr double kShapeZeroThreshold = 1e-10;

// Beyond this magnitude the softplus maps are numerically equal to the
// identity; switching branches avoids overflow in exp.
inline constexpr double kSoftplusLinearCutoff = 30.0;

// (x^s - 1)/s with the log-limit branch for tiny |s|. Well defined for
// x in [0, 1]; x = 0 yields -1/s (s > 0), -inf (s <= 0).
inline double power_ratio(double x, double s) {
    if (std::abs(s) < kShapeZeroThreshold) return std::log(x);
    return std::expm1(s * std::log(x)) / s;
}

// Same quantity evaluated from a precomputed log x.
inline double power_ratio_from_log(double log_x, double s) {
    if (std::abs(s) < kShapeZeroThreshold) return log_x;
    return std::expm1(s * log_x) / s;
}

// log(1 + e^x), linear branch for large x.
inline double softplus(double x) {
    if (x > kSoftplusLinearCutoff) return x;
    return std::log1p(std::exp(x));
}

// Inverse of softplus: log(e^x - 1), defined for x > 0.
inline double softplus_inverse(double x) {
    if (x > kSoftplusLinearCutoff) return x;
    return std::log(std::expm1(x));
}

// Deterministic pairwise reduction; summation order is independent of how
// the values were produced, so parallel and serial producers agree bitwise.
inline double pairwise_sum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n <= 8) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace fpld
