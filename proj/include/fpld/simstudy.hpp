// Simulation study: rejection-sampled true parameters, replicate generation
// across sample sizes, and estimator comparison by skill score, parameter
// MSE and timing.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fpld/estimation.hpp"
#include "fpld/rng.hpp"
#include "fpld/scoring.hpp"

namespace fpld {

struct SimConfig {
    std::size_t replicates = 500;
    std::vector<int> sample_size_exponents = {7, 8, 9, 10, 11, 12, 13, 14};
    std::vector<Estimator> estimators = {Estimator::mq, Estimator::ml, Estimator::starship};
    std::uint64_t seed = 0;
    SkillMode skill_mode = SkillMode::empirical;
    std::size_t mc_samples = 1000;  // expected-mode Monte-Carlo draws
    // Reject truths whose right tail is infinite, on top of the standard
    // acceptance conditions.
    bool require_finite_support = false;
    FitConfig fit;
    int threads = 1;
};

struct SimRow {
    std::size_t replicate = 0;
    std::size_t n = 0;
    Estimator estimator = Estimator::mq;
    double skill = 0.0;
    double mse = 0.0;  // mean squared parameter error of this replicate
    double elapsed_seconds = 0.0;
    bool converged = false;
    FpldStar truth;
    FpldStar estimate;
};

struct SimCell {
    Estimator estimator = Estimator::mq;
    std::size_t n = 0;
    double mean_skill = 0.0;
    double mse = 0.0;
    double mean_seconds = 0.0;
    std::size_t included = 0;
    std::size_t excluded = 0;  // non-converged or failed fits
};

struct SimResult {
    std::vector<SimRow> rows;    // ordered by (replicate, n, estimator)
    std::vector<SimCell> summary;  // ordered by (estimator, n)
};

// One truth draw: median ~ N(5, 3^2), IQR ~ U(1.5, 8), tail weight
// ~ U(-0.9, 0.9), left shape ~ U(0.01, 0.9), right shape ~ U(-0.3, 0.7),
// accepted when Q(0) > 0 and Q(1) - Q(0) > 1. Throws after 1e5 consecutive
// rejections.
FpldStar sample_lambda_star(Rng& rng, bool require_finite_support = false);

// Mean over replicates of the per-replicate mean squared coordinate error,
// in star coordinates.
double parameter_mse(std::span<const FpldStar> truths, std::span<const FpldStar> estimates);

// Full study: truths are shared across sample sizes within a replicate, all
// work units carry derived seeds, and results are deterministic for a given
// config regardless of thread count.
SimResult run_simulation(const SimConfig& config);

}  // namespace fpld
