#include "fpld/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fpld {
namespace {

constexpr double kReflection = 1.0;
constexpr double kExpansion = 2.0;
constexpr double kContraction = 0.5;
constexpr double kShrink = 0.5;

double spread(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

SimplexResult nelder_mead(const ObjectiveFn& objective, const std::vector<double>& start,
                          const SimplexOptions& options) {
    const std::size_t dim = start.size();
    std::vector<std::vector<double>> simplex(dim + 1, start);
    std::vector<double> values(dim + 1);
    int evaluations = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evaluations;
        const double v = objective(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += options.initial_step;
    for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), candidate(dim);
    bool converged = false;

    while (evaluations < options.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim - 1];

        const double f_spread = values[worst] - values[best];
        if (f_spread <= options.function_tolerance * (std::abs(values[best]) + options.function_tolerance)) {
            converged = true;
            break;
        }
        double x_spread = 0.0;
        for (std::size_t i = 0; i <= dim; ++i)
            x_spread = std::max(x_spread, spread(simplex[i], simplex[best]));
        if (x_spread <= options.parameter_tolerance) {
            converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        auto blend = [&](double coef) {
            for (std::size_t j = 0; j < dim; ++j)
                candidate[j] = centroid[j] + coef * (centroid[j] - simplex[worst][j]);
        };

        blend(kReflection);
        const double f_reflect = eval(candidate);
        if (f_reflect < values[order[0]]) {
            const std::vector<double> reflected = candidate;
            blend(kExpansion);
            const double f_expand = eval(candidate);
            if (f_expand < f_reflect) {
                simplex[worst] = candidate;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < values[second_worst]) {
            simplex[worst] = candidate;
            values[worst] = f_reflect;
            continue;
        }
        if (f_reflect < values[worst]) {
            blend(kContraction);  // outside contraction
        } else {
            blend(-kContraction);  // inside contraction
        }
        const double f_contract = eval(candidate);
        if (f_contract < std::min(f_reflect, values[worst])) {
            simplex[worst] = candidate;
            values[worst] = f_contract;
            continue;
        }
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < dim; ++j)
                simplex[i][j] = simplex[best][j] + kShrink * (simplex[i][j] - simplex[best][j]);
            values[i] = eval(simplex[i]);
            if (evaluations >= options.max_evaluations) break;
        }
    }

    const std::size_t best =
        static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    return {simplex[best], values[best], evaluations, converged};
}

SimplexResult nelder_mead_restarted(const ObjectiveFn& objective, const std::vector<double>& start,
                                    const SimplexOptions& options) {
    SimplexResult best = nelder_mead(objective, start, options);
    int budget = options.max_evaluations - best.evaluations;
    int total = best.evaluations;
    // Each restart must pay for at least one simplex sweep to be worthwhile.
    const int min_budget = 8 * static_cast<int>(start.size() + 1);
    while (budget > min_budget) {
        SimplexOptions rerun = options;
        rerun.max_evaluations = budget;
        const SimplexResult next = nelder_mead(objective, best.x, rerun);
        total += next.evaluations;
        budget -= next.evaluations;
        const double improvement = best.fx - next.fx;
        const bool improved =
            improvement > options.function_tolerance * (std::abs(best.fx) + options.function_tolerance);
        if (next.fx < best.fx) {
            const bool was_converged = best.converged;
            best = next;
            best.converged = next.converged || was_converged;
        }
        if (!improved) break;
    }
    best.evaluations = total;
    return best;
}

AugLagResult minimize_augmented_lagrangian(const ObjectiveFn& objective,
                                           const std::vector<InequalityConstraint>& constraints,
                                           const std::vector<double>& start,
                                           const AugLagOptions& options) {
    AugLagResult result;
    if (constraints.empty()) {
        const SimplexResult solution = nelder_mead_restarted(objective, start, options.simplex);
        result.x = solution.x;
        result.objective = solution.fx;
        result.evaluations = solution.evaluations;
        result.converged = solution.converged;
        return result;
    }

    const std::size_t m = constraints.size();
    std::vector<double> multipliers(m, 0.0);
    double penalty = options.initial_penalty;

    auto constraint_values = [&](const std::vector<double>& x) {
        std::vector<double> g(m);
        for (std::size_t i = 0; i < m; ++i) g[i] = constraints[i].value(x);
        return g;
    };
    auto violation = [&](const std::vector<double>& g) {
        double v = 0.0;
        for (double gi : g) v = std::max(v, gi);
        return v;
    };

    std::vector<double> x = start;
    double best_feasible_objective = std::numeric_limits<double>::infinity();
    std::vector<double> best_feasible_x;
    int evaluations = 0;
    bool inner_converged = false;
    double previous_violation = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
        auto merit = [&](const std::vector<double>& candidate) {
            double value = objective(candidate);
            if (!std::isfinite(value)) return std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                const double g = constraints[i].value(candidate);
                const double shifted = std::max(0.0, multipliers[i] + penalty * g);
                value += (shifted * shifted - multipliers[i] * multipliers[i]) / (2.0 * penalty);
            }
            return value;
        };
        const SimplexResult inner = nelder_mead_restarted(merit, x, options.simplex);
        evaluations += inner.evaluations;
        x = inner.x;
        inner_converged = inner.converged;

        const std::vector<double> g = constraint_values(x);
        const double current_violation = violation(g);
        if (current_violation <= options.constraint_tolerance) {
            const double f = objective(x);
            if (f < best_feasible_objective) {
                best_feasible_objective = f;
                best_feasible_x = x;
            }
            if (inner_converged) break;
        }
        for (std::size_t i = 0; i < m; ++i)
            multipliers[i] = std::max(0.0, multipliers[i] + penalty * g[i]);
        if (current_violation > 0.25 * previous_violation)
            penalty *= options.penalty_growth;
        previous_violation = current_violation;
    }

    if (!best_feasible_x.empty()) x = best_feasible_x;
    result.x = x;
    result.objective = objective(x);
    result.constraint_values = constraint_values(x);
    result.evaluations = evaluations;
    result.converged = inner_converged && violation(result.constraint_values) <= options.constraint_tolerance;
    return result;
}

}  // namespace fpld
