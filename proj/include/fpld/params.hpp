// Parameter types for the five-parameter lambda distribution (FPLD) and the
// conversions between its three parametrisations.
#pragma once

#include <array>

namespace fpld {

// Natural parametrisation: the coefficients of the quantile function.
// `scale > 0` and `tail_weight` in [-1, 1] make the quantile function
// nondecreasing; evaluation routines accept arbitrary values so that
// GPD-difference constructions can be checked verbatim.
struct FpldNatural {
    double location = 0.0;     // units of the data
    double scale = 1.0;        // units of the data, > 0
    double tail_weight = 0.0;  // weight between the two tails, in [-1, 1]
    double left_shape = 1.0;   // left-tail shape
    double right_shape = 1.0;  // right-tail shape
};

// Quantile-anchored parametrisation: location is the median and scale the
// inter-quartile range. Shared shape parameters are unchanged.
struct FpldStar {
    double median = 0.0;
    double iqr = 1.0;  // > 0
    double tail_weight = 0.0;
    double left_shape = 1.0;
    double right_shape = 1.0;
};

// Unconstrained optimizer coordinates. Mapping back always produces
// iqr > 0, tail_weight in (-1, 1), left_shape > 0, right_shape > -0.5.
struct FpldUnconstrained {
    std::array<double, 5> coord{};
};

// Generalised Pareto distribution parameters (location, scale, shape).
struct GpdParams {
    double location = 0.0;
    double scale = 1.0;  // > 0
    double shape = 0.0;
};

// Closed interval [lower, upper]; either end may be infinite.
struct SupportInterval {
    double lower;
    double upper;
};

// Throw std::domain_error unless scale > 0 and |tail_weight| <= 1.
void validate(const FpldNatural& params);

// Median/IQR anchored form and its closed-form inverse.
FpldStar to_star(const FpldNatural& params);
FpldNatural from_star(const FpldStar& params);

// Unconstrained coordinates for numerical optimisation and their inverse.
// to_unconstrained requires iqr > 0, |tail_weight| < 1, left_shape > 0 and
// right_shape > -0.5.
FpldUnconstrained to_unconstrained(const FpldStar& params);
FpldStar from_unconstrained(const FpldUnconstrained& coords);

inline FpldNatural from_unconstrained_natural(const FpldUnconstrained& coords) {
    return from_star(from_unconstrained(coords));
}

}  // namespace fpld
