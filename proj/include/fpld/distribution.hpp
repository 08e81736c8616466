// Closed-form mathematics of the FPLD: quantile function, density, numeric
// CDF, support, sampling and the GPD-difference construction.
#pragma once

#include <cstdint>
#include <vector>

#include "fpld/params.hpp"

namespace fpld {

// Q(p): the quantile function. Requires p in [0, 1]; a boundary p on an
// infinite-support side returns an infinity rather than throwing.
double quantile(const FpldNatural& params, double p);

// dQ/dp, strictly positive on (0, 1) for valid parameters. Requires
// 0 < p < 1.
double quantile_density(const FpldNatural& params, double p);

// Same expression without the range check; used where boundary values are
// legitimate limits.
double quantile_slope(const FpldNatural& params, double p);

// Density f(y) = 1 / Q'(F(y)). Zero outside the support.
double density(const FpldNatural& params, double y);

// Numeric CDF via monotone root finding on Q; clamps to {0, 1} outside the
// support. Throws on non-finite y.
double cdf(const FpldNatural& params, double y);

// CDF with an explicit starting point for the root search, for callers
// re-solving at slowly moving parameters.
double cdf_from(const FpldNatural& params, double y, double initial_p);

// [Q(0), Q(1)], evaluated from the quantile function itself.
SupportInterval support(const FpldNatural& params);

// True iff left_shape > 0 and the lower support endpoint is positive.
bool has_positive_support(const FpldNatural& params);

// Inverse-transform sample of size n from a deterministic seeded generator.
// Uniform draws come from the open interval (0, 1).
std::vector<double> sample(const FpldNatural& params, std::size_t n, std::uint64_t seed);

// GPD quantile function, with the logarithmic branch for |shape| below the
// zero threshold.
double gpd_quantile(const GpdParams& params, double p);

// Quantile function of the reflection -X of a GPD variable X.
double gpd_reflected_quantile(const GpdParams& params, double p);

// FPLD whose quantile function equals the difference between an upper-tail
// GPD quantile and a reflected lower-tail GPD quantile, with the two
// probabilities linked through p2 = p^a. When the two effective scales
// coincide exactly, the representation degenerates; the limit convention
// tail_weight = +1 (all weight on the right tail) is used.
FpldNatural fpld_from_gpd_pair(const GpdParams& max_tail, const GpdParams& min_tail, double a);

}  // namespace fpld
