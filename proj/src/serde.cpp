#include "fpld/serde.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace fpld {
namespace {

nlohmann::json values_json(const char* kind, std::array<double, 5> values) {
    return nlohmann::json{{"parametrisation", kind}, {"values", values}};
}

std::array<double, 5> values_from(const nlohmann::json& value) {
    const auto& values = value.at("values");
    if (!values.is_array() || values.size() != 5)
        throw std::domain_error("params JSON: 'values' must hold exactly five numbers");
    std::array<double, 5> out{};
    for (std::size_t i = 0; i < 5; ++i) out[i] = values[i].get<double>();
    return out;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buffer{};
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), result.ptr);
}

nlohmann::json params_to_json(const FpldNatural& params) {
    return values_json("natural", {params.location, params.scale, params.tail_weight,
                                   params.left_shape, params.right_shape});
}

nlohmann::json params_to_json(const FpldStar& params) {
    return values_json("star", {params.median, params.iqr, params.tail_weight,
                                params.left_shape, params.right_shape});
}

nlohmann::json params_to_json(const FpldUnconstrained& params) {
    return values_json("unconstrained",
                       {params.coord[0], params.coord[1], params.coord[2], params.coord[3],
                        params.coord[4]});
}

FpldNatural params_from_json(const nlohmann::json& value) {
    const std::string kind = value.at("parametrisation").get<std::string>();
    const std::array<double, 5> v = values_from(value);
    if (kind == "natural") return {v[0], v[1], v[2], v[3], v[4]};
    if (kind == "star") return from_star({v[0], v[1], v[2], v[3], v[4]});
    if (kind == "unconstrained")
        return from_unconstrained_natural(FpldUnconstrained{{v[0], v[1], v[2], v[3], v[4]}});
    throw std::domain_error("params JSON: unknown parametrisation '" + kind + "'");
}

FpldStar star_params_from_json(const nlohmann::json& value) {
    const std::string kind = value.at("parametrisation").get<std::string>();
    const std::array<double, 5> v = values_from(value);
    if (kind == "star") return {v[0], v[1], v[2], v[3], v[4]};
    return to_star(params_from_json(value));
}

nlohmann::json fit_result_to_json(const FitResult& result, bool with_timings) {
    nlohmann::json slack = nlohmann::json::object();
    for (const ConstraintSlack& c : result.constraint_slack) slack[c.name] = c.value;
    return nlohmann::json{{"params", params_to_json(result.params)},
                          {"loss", result.loss},
                          {"converged", result.converged},
                          {"evaluations", result.evaluations},
                          {"elapsed_ms", with_timings ? result.elapsed_seconds * 1e3 : 0.0},
                          {"constraint_slack", slack}};
}

nlohmann::json bundle_to_json(const QuantileFitBundle& bundle) {
    std::vector<double> probabilities;
    std::vector<std::vector<double>> coefficients;
    for (const QuantileFit& fit : bundle.fits) {
        probabilities.push_back(fit.p);
        coefficients.emplace_back(fit.beta.data(), fit.beta.data() + fit.beta.size());
    }
    const auto& record = bundle.standardization;
    return nlohmann::json{
        {"probabilities", probabilities},
        {"coefficients", coefficients},
        {"covariates", record.names},
        {"standardization",
         {{"mean", std::vector<double>(record.mean.data(), record.mean.data() + record.mean.size())},
          {"sd", std::vector<double>(record.sd.data(), record.sd.data() + record.sd.size())}}}};
}

QuantileFitBundle bundle_from_json(const nlohmann::json& value) {
    QuantileFitBundle bundle;
    const auto probabilities = value.at("probabilities").get<std::vector<double>>();
    const auto coefficients = value.at("coefficients").get<std::vector<std::vector<double>>>();
    if (probabilities.size() != coefficients.size())
        throw std::domain_error("bundle JSON: probability/coefficient length mismatch");
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        QuantileFit fit;
        fit.p = probabilities[i];
        fit.beta = Eigen::Map<const Eigen::VectorXd>(coefficients[i].data(),
                                                     static_cast<Eigen::Index>(coefficients[i].size()));
        bundle.fits.push_back(std::move(fit));
    }
    bundle.standardization.names = value.at("covariates").get<std::vector<std::string>>();
    const auto mean = value.at("standardization").at("mean").get<std::vector<double>>();
    const auto sd = value.at("standardization").at("sd").get<std::vector<double>>();
    bundle.standardization.mean =
        Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    bundle.standardization.sd =
        Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    return bundle;
}

}  // namespace fpld
