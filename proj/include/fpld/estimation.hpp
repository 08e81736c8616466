// Marginal estimators for the FPLD: method of quantiles, maximum likelihood
// and the starship, sharing grid-search initialisation and constrained
// derivative-free optimisation. Gamma and lognormal ML baselines included.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpld/params.hpp"

namespace fpld {

enum class Estimator { mq, ml, starship };

std::string to_string(Estimator estimator);
Estimator estimator_from_string(const std::string& name);

// Ordered (probability, value) pairs: probabilities strictly increasing in
// (0, 1), values nondecreasing.
struct QuantileSet {
    std::vector<double> probabilities;
    std::vector<double> values;

    std::size_t size() const { return probabilities.size(); }
};

// Validating factory for externally assembled sets.
QuantileSet make_quantile_set(std::vector<double> probabilities, std::vector<double> values);

// Linear interpolation of the value at probability p, clamped at the ends.
double interpolate_quantile(const QuantileSet& qs, double p);

struct FitConfig {
    Estimator estimator = Estimator::mq;
    bool enforce_positive_support = false;
    double positive_support_probability = 1e-4;
    bool data_bracket_constraints = true;  // method of quantiles only
    // Freezes the tail weight (the symmetric-weight baseline) when set.
    std::optional<double> fixed_tail_weight;
    double function_tolerance = 1e-8;
    double parameter_tolerance = 1e-8;
    int max_evaluations = 5000;
    // Initialisation grids for the three shape parameters.
    std::vector<double> tail_weight_grid = {-0.5, -0.25, 0.0, 0.25, 0.5};
    std::vector<double> left_shape_grid = {0.1, 0.2, 0.4, 0.8, 1.0, 1.5};
    std::vector<double> right_shape_grid = {-0.4, -0.1, 0.1, 0.2, 0.4, 0.8, 1.0, 1.5};
    // When nonzero and smaller than the target count, the quantile targets
    // are thinned to this many evenly spaced points.
    std::size_t quantile_thinning = 0;
};

struct ConstraintSlack {
    std::string name;
    double value;  // satisfied when <= 0
};

struct FitResult {
    FpldStar params;
    double loss = 0.0;  // estimator-specific objective at params
    bool converged = false;
    long evaluations = 0;
    double elapsed_seconds = 0.0;
    std::vector<ConstraintSlack> constraint_slack;
};

// Plotting-position empirical quantiles p_i = (i - 0.5)/n on sorted data.
QuantileSet empirical_quantiles(std::span<const double> y);

// Sum of absolute distances between the targets and the model quantiles.
double mq_loss(const FpldStar& params, const QuantileSet& targets);

// Median/IQR anchors plus the best grid combination of the shape parameters
// under mq_loss.
FpldStar grid_search_init(const QuantileSet& targets, const FitConfig& config);

// Method of quantiles: minimises mq_loss over the unconstrained coordinates,
// with optional data-bracketing and relaxed positive-support constraints.
FitResult fit_mq(const QuantileSet& targets, const FitConfig& config);

// Log-likelihood through the reciprocal quantile derivative; -inf when any
// observation falls outside the support.
double log_likelihood(const FpldNatural& params, std::span<const double> y);

// Maximum likelihood with the shared initialisation and constraint
// machinery; support violations act as an infinite penalty.
FitResult fit_ml(std::span<const double> y, const FitConfig& config);

// Anderson-Darling statistic of PIT values against uniformity; values at the
// ends are clamped to [1e-12, 1 - 1e-12].
double anderson_darling(std::span<const double> u);

// Starship: minimises the Anderson-Darling statistic of the PIT-transformed
// data.
FitResult fit_starship(std::span<const double> y, const FitConfig& config);

// Dispatch on config.estimator.
FitResult fit(std::span<const double> y, const FitConfig& config);

// Baseline distributions, maximum likelihood.
struct GammaParams {
    double shape;
    double rate;
};
struct LognormalParams {
    double meanlog;
    double sdlog;
};

GammaParams fit_gamma_ml(std::span<const double> y);
LognormalParams fit_lognormal_ml(std::span<const double> y);
double gamma_cdf(const GammaParams& params, double y);
double lognormal_cdf(const LognormalParams& params, double y);

}  // namespace fpld
