#include "fpld/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fpld/distribution.hpp"
#include "fpld/numeric.hpp"
#include "fpld/parallel.hpp"
#include "fpld/quadrature.hpp"
#include "fpld/rng.hpp"

namespace fpld {
namespace {

// The closed-form pieces below contain 1/shape factors; between the exact
// logarithmic branch and full-precision territory the difference quotient
// cancels catastrophically, so that window is evaluated by series expansion.
constexpr double kSeriesWindow = 1e-6;

// int_F^1 (p^s - 1)/s dp
double upper_tail_integral_left(double s, double F) {
    if (F <= 0.0) return -1.0 / (1.0 + s);
    if (F >= 1.0) return 0.0;
    const double log_f = std::log(F);
    if (std::abs(s) < kShapeZeroThreshold) return F - 1.0 - F * log_f;
    if (std::abs(s) < kSeriesWindow) {
        const double c1 = -(1.0 - F) - F * log_f;
        const double c2 = (1.0 - F) + F * log_f - 0.5 * F * log_f * log_f;
        const double c3 = -(1.0 - F) - F * log_f + 0.5 * F * log_f * log_f -
                          F * log_f * log_f * log_f / 6.0;
        return c1 + s * (c2 + s * c3);
    }
    return ((1.0 - std::pow(F, s + 1.0)) / (s + 1.0) - (1.0 - F)) / s;
}

// int_F^1 ((1-p)^s - 1)/s dp
double upper_tail_integral_right(double s, double F) {
    if (F <= 0.0) return -1.0 / (1.0 + s);
    if (F >= 1.0) return 0.0;
    const double G = 1.0 - F;
    const double log_g = std::log(G);
    if (std::abs(s) < kShapeZeroThreshold) return G * (log_g - 1.0);
    if (std::abs(s) < kSeriesWindow) {
        const double c1 = G * (log_g - 1.0);
        const double c2 = G * (0.5 * log_g * log_g - log_g + 1.0);
        const double c3 = G * (log_g * log_g * log_g / 6.0 - 0.5 * log_g * log_g + log_g - 1.0);
        return c1 + s * (c2 + s * c3);
    }
    return (std::pow(G, s + 1.0) / (s + 1.0) - G) / s;
}

// int_0^1 p (p^s - 1)/s dp; continuous through s = 0.
double first_moment_integral_left(double s) { return -0.5 / (s + 2.0); }

// int_0^1 p ((1-p)^s - 1)/s dp; continuous through s = 0.
double first_moment_integral_right(double s) {
    return -0.5 * (s + 3.0) / ((s + 1.0) * (s + 2.0));
}

}  // namespace

double crps_fpld(const FpldNatural& params, double y) {
    if (!std::isfinite(y)) throw std::domain_error("crps_fpld: observation must be finite");
    const double left_coef = 0.5 * params.scale * (1.0 - params.tail_weight);
    const double right_coef = 0.5 * params.scale * (1.0 + params.tail_weight);
    if (left_coef != 0.0 && params.left_shape <= -1.0)
        throw std::domain_error("crps_fpld: left shape <= -1, the defining integral diverges");
    if (right_coef != 0.0 && params.right_shape <= -1.0)
        throw std::domain_error("crps_fpld: right shape <= -1, the defining integral diverges");

    const double F = cdf(params, y);

    // int_0^1 p Q(p) dp
    double first_moment = 0.5 * params.location;
    if (left_coef != 0.0) first_moment += left_coef * first_moment_integral_left(params.left_shape);
    if (right_coef != 0.0)
        first_moment -= right_coef * first_moment_integral_right(params.right_shape);

    // int_F^1 Q(p) dp
    double tail = (1.0 - F) * params.location;
    if (left_coef != 0.0) tail += left_coef * upper_tail_integral_left(params.left_shape, F);
    if (right_coef != 0.0) tail -= right_coef * upper_tail_integral_right(params.right_shape, F);

    const double score = y * (2.0 * F - 1.0) - 2.0 * first_moment + 2.0 * tail;
    return std::max(score, 0.0);
}

double crps_quadrature(const std::function<double(double)>& cdf_fn, SupportInterval support,
                       double y, double abs_tolerance) {
    if (!std::isfinite(y)) throw std::domain_error("crps_quadrature: observation must be finite");
    constexpr double tail_mass = 1e-10;

    // Walk outward until the CDF mass beyond t drops below tail_mass; gives a
    // finite stand-in for an infinite support end.
    auto extend = [&](double anchor, double direction) {
        double step = std::max(1.0, 0.1 * std::abs(anchor));
        double t = anchor + direction * step;
        for (int iter = 0; iter < 400; ++iter) {
            const double mass = direction < 0.0 ? cdf_fn(t) : 1.0 - cdf_fn(t);
            if (mass <= tail_mass) return t;
            step *= 2.0;
            t += direction * step;
        }
        throw std::runtime_error("crps_quadrature: could not locate a negligible-mass tail point");
    };

    double lo = support.lower;
    double hi = support.upper;
    const double anchor = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : y);
    if (!std::isfinite(lo)) lo = extend(std::min(anchor, y), -1.0);
    if (!std::isfinite(hi)) hi = extend(std::max(std::isfinite(support.lower) ? support.lower : anchor, y), +1.0);

    // Pull both ends in to the tail_mass quantiles. Remote support endpoints
    // would otherwise leave the mass concentrated in a sliver the adaptive
    // panels never sample.
    auto bisect_lower = [&](double a, double b) {
        for (int iter = 0; iter < 200 && b - a > 1e-12 * std::max(1.0, std::abs(a)); ++iter) {
            const double mid = 0.5 * (a + b);
            (cdf_fn(mid) > tail_mass ? b : a) = mid;
        }
        return a;
    };
    auto bisect_upper = [&](double a, double b) {
        for (int iter = 0; iter < 200 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++iter) {
            const double mid = 0.5 * (a + b);
            (1.0 - cdf_fn(mid) > tail_mass ? a : b) = mid;
        }
        return b;
    };
    if (cdf_fn(std::min(hi, y)) > tail_mass) lo = bisect_lower(lo, std::min(hi, y));
    if (1.0 - cdf_fn(std::max(lo, y)) > tail_mass) hi = bisect_upper(std::max(lo, y), hi);
    lo = std::min(lo, y);
    hi = std::max(hi, y);

    const auto below = [&](double t) {
        const double f = cdf_fn(t);
        return f * f;
    };
    const auto above = [&](double t) {
        const double f = cdf_fn(t) - 1.0;
        return f * f;
    };
    // The integrand jumps at the observation; integrating each side
    // separately keeps the panels smooth.
    double total = 0.0;
    if (y > lo) total += integrate(below, lo, y, 0.5 * abs_tolerance);
    if (hi > y) total += integrate(above, y, hi, 0.5 * abs_tolerance);
    return total;
}

double mean_crps(std::span<const FpldNatural> params_per_case, std::span<const double> y_per_case,
                 int threads) {
    if (params_per_case.size() != y_per_case.size())
        throw std::domain_error("mean_crps: mismatched forecast and observation counts");
    if (y_per_case.empty()) throw std::domain_error("mean_crps: no observations");
    std::vector<double> scores(y_per_case.size());
    parallel_for(y_per_case.size(), threads,
                 [&](std::size_t i) { scores[i] = crps_fpld(params_per_case[i], y_per_case[i]); });
    return pairwise_sum(scores) / static_cast<double>(scores.size());
}

double mean_crps(const FpldNatural& params, std::span<const double> y, int threads) {
    if (y.empty()) throw std::domain_error("mean_crps: no observations");
    std::vector<double> scores(y.size());
    parallel_for(y.size(), threads,
                 [&](std::size_t i) { scores[i] = crps_fpld(params, y[i]); });
    return pairwise_sum(scores) / static_cast<double>(scores.size());
}

double skill_score(const FpldNatural& fitted, const FpldNatural& truth, std::span<const double> y,
                   SkillMode mode, std::size_t mc_samples, std::uint64_t seed) {
    const double fitted_score = mean_crps(fitted, y);
    if (fitted_score == 0.0) throw std::domain_error("skill_score: zero denominator");
    double reference = 0.0;
    switch (mode) {
        case SkillMode::empirical:
            reference = mean_crps(truth, y);
            break;
        case SkillMode::expected: {
            if (mc_samples == 0)
                throw std::domain_error("skill_score: expected mode needs Monte-Carlo samples");
            const std::vector<double> draws = sample(truth, mc_samples, seed);
            reference = mean_crps(fitted, draws);
            break;
        }
    }
    return 1.0 - reference / fitted_score;
}

PitErrors pit_errors(std::span<const double> u) {
    if (u.size() < 2) throw std::domain_error("pit_errors: need at least two PIT values");
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("pit_errors: PIT values must lie in [0, 1]");
    const double n = static_cast<double>(u.size());
    const double mean = pairwise_sum(u) / n;
    std::vector<double> sq(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) sq[i] = (u[i] - mean) * (u[i] - mean);
    const double sd = std::sqrt(pairwise_sum(sq) / (n - 1.0));
    return {mean - 0.5, sd - 1.0 / std::sqrt(12.0)};
}

double permutation_test_crps(std::span<const double> scores_a, std::span<const double> scores_b,
                             std::size_t n_perm, std::uint64_t seed) {
    if (scores_a.size() != scores_b.size())
        throw std::domain_error("permutation_test_crps: score vectors must be paired");
    if (scores_a.empty()) throw std::domain_error("permutation_test_crps: no scores");
    if (n_perm == 0) throw std::domain_error("permutation_test_crps: need at least one permutation");
    const std::size_t n = scores_a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = scores_a[i] - scores_b[i];
    const double observed = std::abs(pairwise_sum(diff) / static_cast<double>(n));

    Rng rng(seed);
    std::size_t at_least_as_extreme = 0;
    std::vector<double> flipped(n);
    for (std::size_t perm = 0; perm < n_perm; ++perm) {
        for (std::size_t i = 0; i < n; ++i) {
            const bool flip = (rng.next_u64() & 1ULL) != 0;
            flipped[i] = flip ? -diff[i] : diff[i];
        }
        const double stat = std::abs(pairwise_sum(flipped) / static_cast<double>(n));
        if (stat >= observed) ++at_least_as_extreme;
    }
    return static_cast<double>(1 + at_least_as_extreme) / static_cast<double>(1 + n_perm);
}

std::vector<std::pair<double, double>> qq_points(const FpldNatural& params,
                                                 std::span<const double> y) {
    if (y.size() < 2) throw std::domain_error("qq_points: need at least two observations");
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<std::pair<double, double>> points(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        points[i] = {sorted[i], quantile(params, p)};
    }
    return points;
}

}  // namespace fpld
