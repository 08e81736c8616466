// JSON wire formats for parameters, fit results and regression bundles, and
// deterministic number formatting for the emitted files.
#pragma once

#include <string>

#include "json.hpp"  // vendored nlohmann/json

#include "fpld/estimation.hpp"
#include "fpld/params.hpp"
#include "fpld/quantreg.hpp"

namespace fpld {

// Shortest round-trip decimal representation; identical across reruns.
std::string format_double(double value);

// {"parametrisation": "natural"|"star"|"unconstrained", "values": [5 numbers]}
nlohmann::json params_to_json(const FpldNatural& params);
nlohmann::json params_to_json(const FpldStar& params);
nlohmann::json params_to_json(const FpldUnconstrained& params);

// Accepts any of the three parametrisations and converts to natural form.
FpldNatural params_from_json(const nlohmann::json& value);
FpldStar star_params_from_json(const nlohmann::json& value);

// Star parameters, loss, convergence flag, evaluation count, wall time in
// milliseconds and per-constraint slack.
nlohmann::json fit_result_to_json(const FitResult& result, bool with_timings = true);

nlohmann::json bundle_to_json(const QuantileFitBundle& bundle);
QuantileFitBundle bundle_from_json(const nlohmann::json& value);

}  // namespace fpld
