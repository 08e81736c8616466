// Derivative-free minimisation: Nelder-Mead simplex search wrapped in an
// augmented-Lagrangian outer loop for inequality constraints g(x) <= 0.
#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fpld {

using ObjectiveFn = std::function<double(const std::vector<double>&)>;

struct InequalityConstraint {
    std::string name;
    ObjectiveFn value;  // satisfied when value(x) <= 0
};

struct SimplexOptions {
    double initial_step = 0.1;
    double function_tolerance = 1e-8;
    double parameter_tolerance = 1e-8;
    int max_evaluations = 5000;
};

struct SimplexResult {
    std::vector<double> x;
    double fx = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Plain Nelder-Mead. Infinite objective values are handled (reflected away
// from), but the start point must be finite.
SimplexResult nelder_mead(const ObjectiveFn& objective, const std::vector<double>& start,
                          const SimplexOptions& options);

// Nelder-Mead restarted from its own solution while the evaluation budget
// lasts and restarts keep improving; the simplex method stalls on
// piecewise-linear objectives and a fresh simplex recovers progress.
SimplexResult nelder_mead_restarted(const ObjectiveFn& objective, const std::vector<double>& start,
                                    const SimplexOptions& options);

struct AugLagOptions {
    double initial_penalty = 10.0;
    double penalty_growth = 10.0;
    int max_outer_iterations = 20;
    double constraint_tolerance = 1e-8;
    SimplexOptions simplex;
};

struct AugLagResult {
    std::vector<double> x;
    double objective = 0.0;
    std::vector<double> constraint_values;  // g_i at the returned point
    int evaluations = 0;
    bool converged = false;
};

AugLagResult minimize_augmented_lagrangian(const ObjectiveFn& objective,
                                           const std::vector<InequalityConstraint>& constraints,
                                           const std::vector<double>& start,
                                           const AugLagOptions& options);

}  // namespace fpld
