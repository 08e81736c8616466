#include "fpld/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "fpld/distribution.hpp"
#include "fpld/numeric.hpp"
#include "fpld/optimizer.hpp"

namespace fpld {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPitClamp = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Active optimizer coordinates; the tail weight drops out when frozen.
struct CoordinateMap {
    std::optional<double> fixed_tail_weight;

    std::size_t dim() const { return fixed_tail_weight ? 4 : 5; }

    FpldUnconstrained expand(const std::vector<double>& active) const {
        FpldUnconstrained coords;
        if (!fixed_tail_weight) {
            std::copy(active.begin(), active.end(), coords.coord.begin());
            return coords;
        }
        const double w = *fixed_tail_weight;
        coords.coord = {active[0], active[1], std::log1p(-w) - std::log1p(w), active[2],
                        active[3]};
        return coords;
    }

    std::vector<double> reduce(const FpldUnconstrained& coords) const {
        if (!fixed_tail_weight)
            return {coords.coord.begin(), coords.coord.end()};
        return {coords.coord[0], coords.coord[1], coords.coord[3], coords.coord[4]};
    }
};

// Quantile targets with per-point logs cached; the probabilities never move
// during a fit, so each loss evaluation costs two expm1 per target.
struct MqTargets {
    std::vector<double> probabilities;
    std::vector<double> values;
    std::vector<double> log_p;
    std::vector<double> log_1mp;

    explicit MqTargets(const QuantileSet& qs)
        : probabilities(qs.probabilities), values(qs.values) {
        log_p.resize(probabilities.size());
        log_1mp.resize(probabilities.size());
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            log_p[i] = std::log(probabilities[i]);
            log_1mp[i] = std::log1p(-probabilities[i]);
        }
    }

    double loss(const FpldStar& star) const {
        const FpldNatural d = from_star(star);
        const double left_coef = 0.5 * d.scale * (1.0 - d.tail_weight);
        const double right_coef = 0.5 * d.scale * (1.0 + d.tail_weight);
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double q = d.location;
            if (left_coef != 0.0) q += left_coef * power_ratio_from_log(log_p[i], d.left_shape);
            if (right_coef != 0.0)
                q -= right_coef * power_ratio_from_log(log_1mp[i], d.right_shape);
            total += std::abs(values[i] - q);
        }
        return total;
    }
};

QuantileSet thin_targets(const QuantileSet& qs, std::size_t keep) {
    if (keep == 0 || qs.size() <= keep) return qs;
    QuantileSet thinned;
    thinned.probabilities.reserve(keep);
    thinned.values.reserve(keep);
    for (std::size_t j = 0; j < keep; ++j) {
        const std::size_t i = (j * (qs.size() - 1)) / (keep - 1);
        thinned.probabilities.push_back(qs.probabilities[i]);
        thinned.values.push_back(qs.values[i]);
    }
    return thinned;
}

void check_config(const FitConfig& config) {
    if (!(config.function_tolerance > 0.0) || !(config.parameter_tolerance > 0.0))
        throw std::domain_error("FitConfig: tolerances must be positive");
    if (config.max_evaluations <= 0)
        throw std::domain_error("FitConfig: evaluation budget must be positive");
    if (config.left_shape_grid.empty() || config.right_shape_grid.empty() ||
        (config.tail_weight_grid.empty() && !config.fixed_tail_weight))
        throw std::domain_error("FitConfig: initialisation grids must be nonempty");
}

std::vector<InequalityConstraint> build_constraints(const FitConfig& config,
                                                    const CoordinateMap& map,
                                                    bool data_brackets, double data_min,
                                                    double data_max) {
    std::vector<InequalityConstraint> constraints;
    auto natural_at = [map](const std::vector<double>& active) {
        return from_unconstrained_natural(map.expand(active));
    };
    if (data_brackets && config.data_bracket_constraints) {
        // The left endpoint is always finite (left_shape > 0 by the
        // coordinate transform); the right-tail constraint is vacuously
        // satisfied (-inf) whenever the right tail is infinite.
        constraints.push_back({"data_bracket_low", [natural_at, data_min](const auto& active) {
                                   return quantile(natural_at(active), 0.0) - data_min;
                               }});
        constraints.push_back({"data_bracket_high", [natural_at, data_max](const auto& active) {
                                   return data_max - quantile(natural_at(active), 1.0);
                               }});
    }
    if (config.enforce_positive_support) {
        const double p0 = config.positive_support_probability;
        constraints.push_back({"positive_support", [natural_at, p0](const auto& active) {
                                   return -quantile(natural_at(active), p0);
                               }});
    }
    return constraints;
}

AugLagOptions auglag_options(const FitConfig& config) {
    AugLagOptions options;
    options.simplex.function_tolerance = config.function_tolerance;
    options.simplex.parameter_tolerance = config.parameter_tolerance;
    options.simplex.max_evaluations = config.max_evaluations;
    return options;
}

FitResult run_fit_from(const ObjectiveFn& objective,
                       const std::vector<InequalityConstraint>& constraints,
                       const FpldStar& init, const FitConfig& config, const CoordinateMap& map) {
    const std::vector<double> x0 = map.reduce(to_unconstrained(init));
    const AugLagResult solution =
        minimize_augmented_lagrangian(objective, constraints, x0, auglag_options(config));

    FitResult result;
    result.params = from_unconstrained(map.expand(solution.x));
    result.loss = solution.objective;
    result.converged = solution.converged;
    result.evaluations = solution.evaluations;

    // The optimizer should never end below a feasible start; re-check
    // explicitly so the guarantee survives constraint trade-offs inside the
    // outer loop.
    bool init_feasible = true;
    std::vector<double> init_slack(constraints.size());
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        init_slack[i] = constraints[i].value(x0);
        init_feasible = init_feasible && init_slack[i] <= 1e-8;
    }
    const double init_objective = objective(x0);
    if (init_feasible && init_objective < result.loss) {
        result.params = init;
        result.loss = init_objective;
        for (std::size_t i = 0; i < constraints.size(); ++i)
            result.constraint_slack.push_back({constraints[i].name, init_slack[i]});
    } else {
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            const double value = solution.constraint_values.empty()
                                     ? constraints[i].value(solution.x)
                                     : solution.constraint_values[i];
            result.constraint_slack.push_back({constraints[i].name, value});
        }
    }
    return result;
}

bool slack_feasible(const FitResult& result) {
    for (const ConstraintSlack& slack : result.constraint_slack)
        if (slack.value > 1e-8) return false;
    return true;
}

// Run the constrained solve from every start and keep the best outcome:
// feasibility first, then objective.
FitResult run_fit(const ObjectiveFn& objective,
                  const std::vector<InequalityConstraint>& constraints,
                  const std::vector<FpldStar>& starts, const FitConfig& config,
                  const CoordinateMap& map) {
    const auto start_time = Clock::now();
    FitResult best;
    bool have_best = false;
    long evaluations = 0;
    for (const FpldStar& start : starts) {
        const FitResult candidate = run_fit_from(objective, constraints, start, config, map);
        evaluations += candidate.evaluations;
        const bool take = !have_best ||
                          (slack_feasible(candidate) && !slack_feasible(best)) ||
                          (slack_feasible(candidate) == slack_feasible(best) &&
                           candidate.loss < best.loss);
        if (take) {
            best = candidate;
            have_best = true;
        }
    }
    best.evaluations = evaluations;
    best.elapsed_seconds = seconds_since(start_time);
    return best;
}

// Warm-started CDF evaluations over a sorted sample. The root of Q(p) = y
// moves slowly between optimizer steps, so the previous solution is an
// excellent Newton start.
struct SortedSampleCdf {
    std::vector<double> y;       // ascending
    std::vector<double> p_last;  // previous roots, plotting positions at first

    explicit SortedSampleCdf(std::vector<double> sorted) : y(std::move(sorted)) {
        p_last.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            p_last[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(y.size());
    }

    void evaluate(const FpldNatural& params) {
        for (std::size_t i = 0; i < y.size(); ++i)
            p_last[i] = cdf_from(params, y[i], p_last[i]);
    }
};

FpldStar support_covering_init(FpldStar init, std::span<const double> sorted_y) {
    // Likelihood-based objectives need every observation strictly inside the
    // support; widen the IQR until the grid start covers the data.
    for (int attempt = 0; attempt < 200; ++attempt) {
        const SupportInterval sup = support(from_star(init));
        if (sorted_y.front() > sup.lower && sorted_y.back() < sup.upper) return init;
        init.iqr *= 1.5;
    }
    return init;
}

double gamma_shape_newton(double s) {
    double shape = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
    for (int iter = 0; iter < 100; ++iter) {
        const double value = std::log(shape) - boost::math::digamma(shape) - s;
        const double derivative = 1.0 / shape - boost::math::trigamma(shape);
        const double step = value / derivative;
        shape -= step;
        if (!(shape > 0.0))
            throw std::runtime_error("fit_gamma_ml: Newton iteration left the domain");
        if (std::abs(step) <= 1e-12 * shape) break;
    }
    return shape;
}

}  // namespace

std::string to_string(Estimator estimator) {
    switch (estimator) {
        case Estimator::mq: return "mq";
        case Estimator::ml: return "ml";
        case Estimator::starship: return "starship";
    }
    return "mq";
}

Estimator estimator_from_string(const std::string& name) {
    if (name == "mq") return Estimator::mq;
    if (name == "ml") return Estimator::ml;
    if (name == "starship") return Estimator::starship;
    throw std::domain_error("unknown estimator: " + name);
}

QuantileSet make_quantile_set(std::vector<double> probabilities, std::vector<double> values) {
    if (probabilities.size() != values.size())
        throw std::domain_error("QuantileSet: probability/value length mismatch");
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        if (!(probabilities[i] > 0.0 && probabilities[i] < 1.0))
            throw std::domain_error("QuantileSet: probabilities must lie in (0, 1)");
        if (i > 0 && !(probabilities[i] > probabilities[i - 1]))
            throw std::domain_error("QuantileSet: probabilities must be strictly increasing");
        if (i > 0 && values[i] < values[i - 1])
            throw std::domain_error("QuantileSet: values must be nondecreasing");
    }
    return {std::move(probabilities), std::move(values)};
}

double interpolate_quantile(const QuantileSet& qs, double p) {
    if (qs.size() == 0) throw std::domain_error("interpolate_quantile: empty set");
    const auto& probs = qs.probabilities;
    if (p <= probs.front()) return qs.values.front();
    if (p >= probs.back()) return qs.values.back();
    const auto hi = std::lower_bound(probs.begin(), probs.end(), p);
    const std::size_t j = static_cast<std::size_t>(hi - probs.begin());
    const double width = probs[j] - probs[j - 1];
    const double t = (p - probs[j - 1]) / width;
    return qs.values[j - 1] + t * (qs.values[j] - qs.values[j - 1]);
}

QuantileSet empirical_quantiles(std::span<const double> y) {
    if (y.size() < 2) throw std::domain_error("empirical_quantiles: need at least two values");
    QuantileSet qs;
    qs.values.assign(y.begin(), y.end());
    std::sort(qs.values.begin(), qs.values.end());
    qs.probabilities.resize(y.size());
    const double n = static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        qs.probabilities[i] = (static_cast<double>(i) + 0.5) / n;
    return qs;
}

double mq_loss(const FpldStar& params, const QuantileSet& targets) {
    const FpldNatural natural = from_star(params);
    double total = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i)
        total += std::abs(targets.values[i] - quantile(natural, targets.probabilities[i]));
    return total;
}

FpldStar grid_search_init(const QuantileSet& targets, const FitConfig& config) {
    if (targets.size() < 2)
        throw std::domain_error("grid_search_init: need at least two quantile targets");
    const double median = interpolate_quantile(targets, 0.5);
    double iqr = interpolate_quantile(targets, 0.75) - interpolate_quantile(targets, 0.25);
    if (!(iqr > 0.0)) iqr = targets.values.back() - targets.values.front();
    if (!(iqr > 0.0)) iqr = 1.0;

    const std::vector<double> weight_grid =
        config.fixed_tail_weight ? std::vector<double>{*config.fixed_tail_weight}
                                 : config.tail_weight_grid;
    const MqTargets cache(targets);
    FpldStar best;
    double best_loss = kInf;
    for (double w : weight_grid)
        for (double left : config.left_shape_grid)
            for (double right : config.right_shape_grid) {
                const FpldStar candidate{median, iqr, w, left, right};
                const double loss = cache.loss(candidate);
                if (loss < best_loss) {
                    best_loss = loss;
                    best = candidate;
                }
            }
    return best;
}

FitResult fit_mq(const QuantileSet& targets, const FitConfig& config) {
    check_config(config);
    const QuantileSet working = thin_targets(targets, config.quantile_thinning);
    if (working.size() < 2) throw std::domain_error("fit_mq: need at least two quantile targets");

    const CoordinateMap map{config.fixed_tail_weight};
    const MqTargets cache(working);
    const ObjectiveFn objective = [&cache, map](const std::vector<double>& active) {
        return cache.loss(from_unconstrained(map.expand(active)));
    };
    const auto constraints = build_constraints(config, map, /*data_brackets=*/true,
                                               working.values.front(), working.values.back());
    const FpldStar init = grid_search_init(working, config);
    return run_fit(objective, constraints, {init}, config, map);
}

double log_likelihood(const FpldNatural& params, std::span<const double> y) {
    validate(params);
    const SupportInterval sup = support(params);
    const double left_coef = 1.0 - params.tail_weight;
    const double right_coef = 1.0 + params.tail_weight;
    double sum_terms = 0.0;
    for (double value : y) {
        if (!(value > sup.lower && value < sup.upper)) return -kInf;
        const double p = cdf(params, value);
        double slope_term = 0.0;
        if (left_coef != 0.0) slope_term += left_coef * std::pow(p, params.left_shape - 1.0);
        if (right_coef != 0.0)
            slope_term += right_coef * std::pow(1.0 - p, params.right_shape - 1.0);
        sum_terms += std::log(slope_term);
    }
    const double n = static_cast<double>(y.size());
    return n * std::log(2.0) - n * std::log(params.scale) - sum_terms;
}

FitResult fit_ml(std::span<const double> y, const FitConfig& config) {
    check_config(config);
    if (y.size() < 10) throw std::domain_error("fit_ml: need at least ten observations");
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());

    const CoordinateMap map{config.fixed_tail_weight};
    auto cache = std::make_shared<SortedSampleCdf>(sorted);
    const double n = static_cast<double>(sorted.size());
    const ObjectiveFn objective = [cache, map, n](const std::vector<double>& active) {
        const FpldNatural d = from_unconstrained_natural(map.expand(active));
        const SupportInterval sup = support(d);
        if (!(cache->y.front() > sup.lower && cache->y.back() < sup.upper)) return kInf;
        cache->evaluate(d);
        const double left_coef = 1.0 - d.tail_weight;
        const double right_coef = 1.0 + d.tail_weight;
        double sum_terms = 0.0;
        for (double p : cache->p_last) {
            double slope_term = 0.0;
            if (left_coef != 0.0) slope_term += left_coef * std::pow(p, d.left_shape - 1.0);
            if (right_coef != 0.0)
                slope_term += right_coef * std::pow(1.0 - p, d.right_shape - 1.0);
            sum_terms += std::log(slope_term);
        }
        const double ll = n * std::log(2.0) - n * std::log(d.scale) - sum_terms;
        return -ll;
    };
    const auto constraints = build_constraints(config, map, /*data_brackets=*/false, 0.0, 0.0);
    // Two starts: the common grid initialisation and the method-of-quantiles
    // solution. The likelihood surface has a flat ridge where inflated tail
    // shapes trade off against the tail weight, and the grid start alone can
    // strand the simplex there.
    std::vector<FpldStar> starts = {
        support_covering_init(grid_search_init(empirical_quantiles(sorted), config), sorted)};
    try {
        FitConfig mq_config = config;
        mq_config.estimator = Estimator::mq;
        starts.push_back(
            support_covering_init(fit_mq(empirical_quantiles(sorted), mq_config).params, sorted));
    } catch (const std::exception&) {
        // fall through with the grid start only
    }
    return run_fit(objective, constraints, starts, config, map);
}

double anderson_darling(std::span<const double> u) {
    if (u.empty()) throw std::domain_error("anderson_darling: empty sample");
    std::vector<double> sorted(u.begin(), u.end());
    for (double& v : sorted) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("anderson_darling: PIT values must lie in [0, 1]");
        v = std::clamp(v, kPitClamp, 1.0 - kPitClamp);
    }
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double weight = 2.0 * static_cast<double>(i) + 1.0;
        sum += weight * (std::log(sorted[i]) + std::log1p(-sorted[n - 1 - i]));
    }
    const double count = static_cast<double>(n);
    return -count - sum / count;
}

FitResult fit_starship(std::span<const double> y, const FitConfig& config) {
    check_config(config);
    if (y.size() < 10) throw std::domain_error("fit_starship: need at least ten observations");
    std::vector<double> sorted(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end());

    const CoordinateMap map{config.fixed_tail_weight};
    auto cache = std::make_shared<SortedSampleCdf>(sorted);
    const ObjectiveFn objective = [cache, map](const std::vector<double>& active) {
        const FpldNatural d = from_unconstrained_natural(map.expand(active));
        cache->evaluate(d);
        // The PIT of sorted data under a monotone CDF is already sorted.
        const std::size_t n = cache->p_last.size();
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double low = std::clamp(cache->p_last[i], kPitClamp, 1.0 - kPitClamp);
            const double high = std::clamp(cache->p_last[n - 1 - i], kPitClamp, 1.0 - kPitClamp);
            sum += (2.0 * static_cast<double>(i) + 1.0) * (std::log(low) + std::log1p(-high));
        }
        const double count = static_cast<double>(n);
        return -count - sum / count;
    };
    const auto constraints = build_constraints(config, map, /*data_brackets=*/false, 0.0, 0.0);
    std::vector<FpldStar> starts = {grid_search_init(empirical_quantiles(sorted), config)};
    try {
        FitConfig mq_config = config;
        mq_config.estimator = Estimator::mq;
        starts.push_back(fit_mq(empirical_quantiles(sorted), mq_config).params);
    } catch (const std::exception&) {
    }
    return run_fit(objective, constraints, starts, config, map);
}

FitResult fit(std::span<const double> y, const FitConfig& config) {
    switch (config.estimator) {
        case Estimator::mq: return fit_mq(empirical_quantiles(y), config);
        case Estimator::ml: return fit_ml(y, config);
        case Estimator::starship: return fit_starship(y, config);
    }
    throw std::logic_error("fit: unhandled estimator");
}

GammaParams fit_gamma_ml(std::span<const double> y) {
    if (y.empty()) throw std::domain_error("fit_gamma_ml: empty sample");
    double sum = 0.0;
    double sum_log = 0.0;
    for (double v : y) {
        if (!(v > 0.0)) throw std::domain_error("fit_gamma_ml: observations must be positive");
        sum += v;
        sum_log += std::log(v);
    }
    const double n = static_cast<double>(y.size());
    const double mean = sum / n;
    const double s = std::log(mean) - sum_log / n;
    if (!(s > 0.0)) throw std::domain_error("fit_gamma_ml: degenerate sample");
    const double shape = gamma_shape_newton(s);
    return {shape, shape / mean};
}

LognormalParams fit_lognormal_ml(std::span<const double> y) {
    if (y.empty()) throw std::domain_error("fit_lognormal_ml: empty sample");
    double sum_log = 0.0;
    for (double v : y) {
        if (!(v > 0.0))
            throw std::domain_error("fit_lognormal_ml: observations must be positive");
        sum_log += std::log(v);
    }
    const double n = static_cast<double>(y.size());
    const double meanlog = sum_log / n;
    double ss = 0.0;
    for (double v : y) {
        const double d = std::log(v) - meanlog;
        ss += d * d;
    }
    return {meanlog, std::sqrt(ss / n)};
}

double gamma_cdf(const GammaParams& params, double y) {
    if (!(y > 0.0)) return 0.0;
    return boost::math::gamma_p(params.shape, params.rate * y);
}

double lognormal_cdf(const LognormalParams& params, double y) {
    if (!(y > 0.0)) return 0.0;
    const double z = (std::log(y) - params.meanlog) / params.sdlog;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

}  // namespace fpld
