#include "fpld/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fpld/distribution.hpp"
#include "fpld/numeric.hpp"

namespace fpld {

void validate(const FpldNatural& params) {
    if (!(params.scale > 0.0))
        throw std::domain_error("FpldNatural: scale must be positive");
    if (!(params.tail_weight >= -1.0 && params.tail_weight <= 1.0))
        throw std::domain_error("FpldNatural: tail weight must lie in [-1, 1]");
}

FpldStar to_star(const FpldNatural& params) {
    validate(params);
    FpldStar star;
    star.median = quantile(params, 0.5);
    star.iqr = quantile(params, 0.75) - quantile(params, 0.25);
    star.tail_weight = params.tail_weight;
    star.left_shape = params.left_shape;
    star.right_shape = params.right_shape;
    return star;
}

FpldNatural from_star(const FpldStar& params) {
    if (!(params.iqr > 0.0))
        throw std::domain_error("from_star: inter-quartile range must be positive");
    if (!(params.tail_weight >= -1.0 && params.tail_weight <= 1.0))
        throw std::domain_error("from_star: tail weight must lie in [-1, 1]");
    // With location 0 and scale 2 the braced term of the quantile function
    // appears with unit coefficient; median and IQR are linear in the
    // natural location and scale, so the inverse is closed form.
    const FpldNatural unit{0.0, 2.0, params.tail_weight, params.left_shape, params.right_shape};
    const double unit_median = quantile(unit, 0.5);
    const double unit_iqr = quantile(unit, 0.75) - quantile(unit, 0.25);
    FpldNatural natural;
    natural.scale = 2.0 * params.iqr / unit_iqr;
    natural.location = params.median - 0.5 * natural.scale * unit_median;
    natural.tail_weight = params.tail_weight;
    natural.left_shape = params.left_shape;
    natural.right_shape = params.right_shape;
    return natural;
}

FpldUnconstrained to_unconstrained(const FpldStar& params) {
    if (!(params.iqr > 0.0))
        throw std::domain_error("to_unconstrained: inter-quartile range must be positive");
    if (!(std::abs(params.tail_weight) < 1.0))
        throw std::domain_error("to_unconstrained: tail weight must lie strictly inside (-1, 1)");
    if (!(params.left_shape > 0.0))
        throw std::domain_error("to_unconstrained: left shape must be positive");
    if (!(params.right_shape > -0.5))
        throw std::domain_error("to_unconstrained: right shape must exceed -0.5");
    FpldUnconstrained coords;
    coords.coord[0] = params.median;
    coords.coord[1] = softplus_inverse(params.iqr);
    coords.coord[2] = std::log1p(-params.tail_weight) - std::log1p(params.tail_weight);
    coords.coord[3] = softplus_inverse(params.left_shape);
    coords.coord[4] = softplus_inverse(params.right_shape + 0.5);
    return coords;
}

FpldStar from_unconstrained(const FpldUnconstrained& coords) {
    constexpr double tiny = std::numeric_limits<double>::min();
    constexpr double weight_cap = 1.0 - 1e-15;
    FpldStar star;
    star.median = coords.coord[0];
    star.iqr = std::max(softplus(coords.coord[1]), tiny);
    star.tail_weight = std::clamp(-std::tanh(0.5 * coords.coord[2]), -weight_cap, weight_cap);
    star.left_shape = std::max(softplus(coords.coord[3]), tiny);
    // softplus underflows for very negative coordinates; keep the result
    // strictly above the -0.5 bound.
    star.right_shape =
        std::max(softplus(coords.coord[4]) - 0.5, std::nextafter(-0.5, 0.0));
    return star;
}

}  // namespace fpld
