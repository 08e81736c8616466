#include "fpld/simstudy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fpld/distribution.hpp"
#include "fpld/numeric.hpp"
#include "fpld/parallel.hpp"

namespace fpld {
namespace {

double squared_error(const FpldStar& truth, const FpldStar& estimate) {
    const double d1 = truth.median - estimate.median;
    const double d2 = truth.iqr - estimate.iqr;
    const double d3 = truth.tail_weight - estimate.tail_weight;
    const double d4 = truth.left_shape - estimate.left_shape;
    const double d5 = truth.right_shape - estimate.right_shape;
    return (d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4 + d5 * d5) / 5.0;
}

}  // namespace

FpldStar sample_lambda_star(Rng& rng, bool require_finite_support) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        FpldStar draw;
        draw.median = rng.normal(5.0, 3.0);
        draw.iqr = rng.uniform(1.5, 8.0);
        draw.tail_weight = rng.uniform(-0.9, 0.9);
        draw.left_shape = rng.uniform(0.01, 0.9);
        draw.right_shape = rng.uniform(-0.3, 0.7);
        const FpldNatural natural = from_star(draw);
        const double lower = quantile(natural, 0.0);
        const double upper = quantile(natural, 1.0);
        if (!(lower > 0.0)) continue;                              // positive support
        if (!(upper - lower > 1.0)) continue;                      // wide enough support
        if (require_finite_support && !std::isfinite(upper)) continue;
        return draw;
    }
    throw std::runtime_error("sample_lambda_star: acceptance rate collapsed");
}

double parameter_mse(std::span<const FpldStar> truths, std::span<const FpldStar> estimates) {
    if (truths.size() != estimates.size())
        throw std::domain_error("parameter_mse: length mismatch");
    if (truths.empty()) throw std::domain_error("parameter_mse: empty input");
    std::vector<double> errors(truths.size());
    for (std::size_t i = 0; i < truths.size(); ++i)
        errors[i] = squared_error(truths[i], estimates[i]);
    return pairwise_sum(errors) / static_cast<double>(errors.size());
}

SimResult run_simulation(const SimConfig& config) {
    if (config.replicates < 1) throw std::domain_error("run_simulation: need replicates >= 1");
    for (int exponent : config.sample_size_exponents)
        if (exponent < 3) throw std::domain_error("run_simulation: exponents must be >= 3");
    if (config.estimators.empty())
        throw std::domain_error("run_simulation: no estimators configured");

    // Truths are drawn up front from per-replicate streams and shared across
    // all sample sizes of that replicate.
    std::vector<FpldStar> truths(config.replicates);
    for (std::size_t r = 0; r < config.replicates; ++r) {
        Rng rng(Rng::derive_seed(config.seed, r));
        truths[r] = sample_lambda_star(rng, config.require_finite_support);
    }

    const std::size_t n_sizes = config.sample_size_exponents.size();
    const std::size_t n_estimators = config.estimators.size();
    const std::size_t cells_per_unit = n_estimators;
    SimResult result;
    result.rows.resize(config.replicates * n_sizes * cells_per_unit);

    // One work unit per (replicate, sample size); each carries its own seed
    // so scheduling cannot change the output.
    parallel_for(config.replicates * n_sizes, config.threads, [&](std::size_t unit) {
        const std::size_t r = unit / n_sizes;
        const std::size_t size_index = unit % n_sizes;
        const std::size_t n =
            std::size_t{1} << config.sample_size_exponents[size_index];
        const FpldStar truth = truths[r];
        const FpldNatural truth_natural = from_star(truth);
        const std::uint64_t unit_seed = Rng::derive_seed(config.seed, 1000003ULL + unit);
        const std::vector<double> y = sample(truth_natural, n, unit_seed);
        // Skill is evaluated on an independent draw from the truth; on the
        // fitting sample the flexible estimators beat the true distribution
        // and the score loses its meaning as a misfit measure. The evaluation
        // sample never shrinks below 4096 to keep the score noise small.
        const std::vector<double> y_eval = sample(
            truth_natural, std::max<std::size_t>(n, 4096), Rng::derive_seed(unit_seed, 0xE5A1));

        for (std::size_t e = 0; e < n_estimators; ++e) {
            SimRow row;
            row.replicate = r;
            row.n = n;
            row.estimator = config.estimators[e];
            row.truth = truth;
            FitConfig fit_config = config.fit;
            fit_config.estimator = config.estimators[e];
            try {
                const FitResult fit_result = fit(y, fit_config);
                row.estimate = fit_result.params;
                row.converged = fit_result.converged;
                row.elapsed_seconds = fit_result.elapsed_seconds;
                row.mse = squared_error(truth, fit_result.params);
                row.skill = skill_score(from_star(fit_result.params), truth_natural, y_eval,
                                        config.skill_mode, config.mc_samples,
                                        Rng::derive_seed(unit_seed, e));
            } catch (const std::exception&) {
                row.converged = false;
                row.skill = std::numeric_limits<double>::quiet_NaN();
                row.mse = std::numeric_limits<double>::quiet_NaN();
            }
            result.rows[unit * cells_per_unit + e] = row;
        }
    });

    // Summaries aggregate the recorded rows in a fixed order.
    for (std::size_t e = 0; e < n_estimators; ++e) {
        for (std::size_t size_index = 0; size_index < n_sizes; ++size_index) {
            SimCell cell;
            cell.estimator = config.estimators[e];
            cell.n = std::size_t{1} << config.sample_size_exponents[size_index];
            std::vector<double> skills, mses, times;
            for (std::size_t r = 0; r < config.replicates; ++r) {
                const SimRow& row =
                    result.rows[(r * n_sizes + size_index) * cells_per_unit + e];
                if (!row.converged || !std::isfinite(row.skill) || !std::isfinite(row.mse)) {
                    ++cell.excluded;
                    continue;
                }
                skills.push_back(row.skill);
                mses.push_back(row.mse);
                times.push_back(row.elapsed_seconds);
            }
            cell.included = skills.size();
            if (!skills.empty()) {
                cell.mean_skill = pairwise_sum(skills) / static_cast<double>(skills.size());
                cell.mse = pairwise_sum(mses) / static_cast<double>(mses.size());
                cell.mean_seconds = pairwise_sum(times) / static_cast<double>(times.size());
            }
            result.summary.push_back(cell);
        }
    }
    return result;
}

}  // namespace fpld
