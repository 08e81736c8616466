// Proper-score evaluation: closed-form CRPS for FPLD forecasts, a quadrature
// oracle, PIT calibration errors, skill scores and a permutation test.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "fpld/params.hpp"

namespace fpld {

// PIT moment errors relative to the standard uniform distribution.
// e_mu < 0 flags positive bias, e_sigma < 0 overdispersion.
struct PitErrors {
    double e_mu;
    double e_sigma;
};

// CRPS of an FPLD forecast against a scalar observation, evaluated from the
// closed-form antiderivatives of the quantile function. Nonnegative.
// Throws when a tail shape with nonzero weight is <= -1 (the defining
// integrals diverge).
double crps_fpld(const FpldNatural& params, double y);

// CRPS by adaptive quadrature of the threshold integral of (F(t) - 1{t>=y})^2.
// Infinite support ends are truncated where the CDF mass drops below 1e-10.
// Serves as the oracle for crps_fpld and scores the non-FPLD baselines.
double crps_quadrature(const std::function<double(double)>& cdf_fn, SupportInterval support,
                       double y, double abs_tolerance = 1e-8);

// Mean CRPS over paired (forecast, observation) cases. The per-case scores
// are evaluated in parallel and reduced pairwise in a fixed order.
double mean_crps(std::span<const FpldNatural> params_per_case, std::span<const double> y_per_case,
                 int threads = 1);
double mean_crps(const FpldNatural& params, std::span<const double> y, int threads = 1);

enum class SkillMode {
    empirical,  // 1 - meanCRPS(truth, y) / meanCRPS(fitted, y)
    expected,   // Monte-Carlo E_truth[S(fitted, Y)] in the numerator
};

// Relative CRPS of a fitted distribution against the truth the data were
// drawn from; exactly 0 in empirical mode when fitted == truth.
double skill_score(const FpldNatural& fitted, const FpldNatural& truth, std::span<const double> y,
                   SkillMode mode = SkillMode::empirical, std::size_t mc_samples = 1000,
                   std::uint64_t seed = 0);

// Moment errors of PIT values; sample standard deviation uses divisor n - 1.
PitErrors pit_errors(std::span<const double> u);

// Two-sided p-value for a zero mean difference of paired scores under random
// sign flips of the pairwise differences.
double permutation_test_crps(std::span<const double> scores_a, std::span<const double> scores_b,
                             std::size_t n_perm, std::uint64_t seed);

// (sample quantile, model quantile) pairs at the plotting positions
// (i - 0.5)/n, for QQ plots.
std::vector<std::pair<double, double>> qq_points(const FpldNatural& params,
                                                 std::span<const double> y);

}  // namespace fpld
