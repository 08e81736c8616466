// Adaptive Gauss-Kronrod integration, used as the independent oracle for the
// closed-form CRPS and as the scoring path for non-FPLD baselines.
#pragma once

#include <functional>

namespace fpld {

// Integrate fn over [a, b] to the requested absolute tolerance with adaptive
// 7/15-point Gauss-Kronrod bisection. Throws std::runtime_error when the
// subdivision limit is reached before the tolerance.
double integrate(const std::function<double(double)>& fn, double a, double b,
                 double abs_tolerance);

}  // namespace fpld
