#include "fpld/distribution.hpp"

#include <cmath>
#include <stdexcept>

#include "fpld/numeric.hpp"
#include "fpld/rng.hpp"

namespace fpld {

double quantile(const FpldNatural& params, double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("quantile: probability outside [0, 1]");
    // Coefficients may vanish at tail_weight = +-1; skipping the term avoids
    // 0 * inf at the boundaries.
    const double left_coef = 0.5 * params.scale * (1.0 - params.tail_weight);
    const double right_coef = 0.5 * params.scale * (1.0 + params.tail_weight);
    double q = params.location;
    if (left_coef != 0.0) q += left_coef * power_ratio(p, params.left_shape);
    if (right_coef != 0.0) q -= right_coef * power_ratio(1.0 - p, params.right_shape);
    return q;
}

double quantile_slope(const FpldNatural& params, double p) {
    const double left_coef = 0.5 * params.scale * (1.0 - params.tail_weight);
    const double right_coef = 0.5 * params.scale * (1.0 + params.tail_weight);
    double slope = 0.0;
    if (left_coef != 0.0) slope += left_coef * std::pow(p, params.left_shape - 1.0);
    if (right_coef != 0.0) slope += right_coef * std::pow(1.0 - p, params.right_shape - 1.0);
    return slope;
}

double quantile_density(const FpldNatural& params, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("quantile_density: probability outside (0, 1)");
    return quantile_slope(params, p);
}

SupportInterval support(const FpldNatural& params) {
    return {quantile(params, 0.0), quantile(params, 1.0)};
}

bool has_positive_support(const FpldNatural& params) {
    if (!(params.left_shape > 0.0)) return false;
    return params.location -
               params.scale * (1.0 - params.tail_weight) / (2.0 * params.left_shape) >
           0.0;
}

double cdf_from(const FpldNatural& params, double y, double initial_p) {
    if (!std::isfinite(y)) throw std::domain_error("cdf: observation must be finite");
    const SupportInterval sup = support(params);
    if (y <= sup.lower) return 0.0;
    if (y >= sup.upper) return 1.0;
    // Bracketed Newton: Q is smooth and strictly increasing, so Newton steps
    // converge fast; any step leaving the bracket falls back to bisection.
    const double tol = 1e-10 * std::max(1.0, std::abs(y));
    double lo = 0.0;
    double hi = 1.0;
    double p = (initial_p > 0.0 && initial_p < 1.0) ? initial_p : 0.5;
    for (int iter = 0; iter < 200; ++iter) {
        const double gap = quantile(params, p) - y;
        if (std::abs(gap) <= tol) return p;
        (gap > 0.0 ? hi : lo) = p;
        const double slope = quantile_slope(params, p);
        double next = p - gap / slope;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        p = next;
    }
    return p;
}

double cdf(const FpldNatural& params, double y) { return cdf_from(params, y, 0.5); }

double density(const FpldNatural& params, double y) {
    const SupportInterval sup = support(params);
    if (!(y > sup.lower && y < sup.upper)) return 0.0;
    const double slope = quantile_slope(params, cdf(params, y));
    if (!(slope > 0.0)) return 0.0;
    return 1.0 / slope;  // slope == inf collapses to density 0
}

std::vector<double> sample(const FpldNatural& params, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> draws(n);
    for (double& value : draws) value = quantile(params, rng.uniform_open01());
    return draws;
}

double gpd_quantile(const GpdParams& params, double p) {
    const double log_survivor = std::log1p(-p);
    if (std::abs(params.shape) < kShapeZeroThreshold)
        return params.location - params.scale * log_survivor;
    return params.location - params.scale * std::expm1(params.shape * log_survivor) / params.shape;
}

double gpd_reflected_quantile(const GpdParams& params, double p) {
    return -gpd_quantile(params, 1.0 - p);
}

FpldNatural fpld_from_gpd_pair(const GpdParams& max_tail, const GpdParams& min_tail, double a) {
    if (!(a > 0.0))
        throw std::domain_error("fpld_from_gpd_pair: linking exponent must be positive");
    const double upper_scale = max_tail.scale;
    const double lower_scale = a * min_tail.scale;  // scale after relinking p2 = p^a
    FpldNatural params;
    params.location = max_tail.location + min_tail.location;
    params.left_shape = a * min_tail.shape;
    params.right_shape = max_tail.shape;
    if (upper_scale == lower_scale) {
        // Degenerate: the weight ratio has no finite limit unless the sign of
        // the scale difference is fixed. Convention: full weight on the right
        // tail, which preserves the upper-tail term exactly.
        params.scale = upper_scale;
        params.tail_weight = 1.0;
    } else {
        params.scale = upper_scale - lower_scale;
        params.tail_weight = (upper_scale + lower_scale) / (upper_scale - lower_scale);
    }
    return params;
}

}  // namespace fpld
