// Command-line front end: marginal fitting, distributional quantile
// regression, the simulation study, single-shot CRPS scoring and the oracle
// self-check.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fpld/distribution.hpp"
#include "fpld/estimation.hpp"
#include "fpld/parallel.hpp"
#include "fpld/pipeline.hpp"
#include "fpld/quadrature.hpp"
#include "fpld/rng.hpp"
#include "fpld/scoring.hpp"
#include "fpld/serde.hpp"
#include "fpld/simstudy.hpp"

namespace {

using nlohmann::json;

struct CommonOptions {
    std::string out_dir = "out";
    std::string format = "csv";
    std::uint64_t seed = 0;
    int threads = 0;
};

struct PipelineOptions {
    std::string observations;
    std::string stations;
    std::string estimator = "mq";
    std::vector<std::string> distributions = {"fpld"};
    std::size_t min_obs = 180;
    bool positive_support = true;
    bool plot_data = false;
    bool perm_test = false;
    std::string perm_pairing = "station";
    std::size_t perm_count = 2000;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    // consumed here so the flag may follow the subcommand; the config file
    // itself is read in a pre-pass before parsing
    static std::string config_sink;
    cmd->add_option("--config", config_sink, "JSON config file supplying any option")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--out", common.out_dir, "Output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--seed", common.seed, "Random seed")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--threads", common.threads, "Worker threads (0 = hardware)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void add_pipeline_inputs(CLI::App* cmd, PipelineOptions& options) {
    cmd->add_option("--input", options.observations, "Daily observations CSV")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--stations", options.stations, "Station metadata CSV")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--min-obs", options.min_obs,
                    "Minimum observations per season for a station to be kept")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_flag("--positive-support,!--no-positive-support", options.positive_support,
                  "Enforce the relaxed positive-support constraint");
    cmd->add_flag("--plot-data", options.plot_data, "Emit per-station QQ/PIT plot data");
}

fpld::FitConfig make_fit_config(const PipelineOptions& options) {
    fpld::FitConfig config;
    config.estimator = fpld::estimator_from_string(options.estimator);
    config.enforce_positive_support = options.positive_support;
    return config;
}

fpld::CleanedData load_and_clean(const PipelineOptions& options) {
    const fpld::IngestResult ingested = fpld::ingest(options.observations, options.stations);
    for (const std::string& warning : ingested.warnings)
        std::cerr << "warning: " << warning << "\n";
    std::cerr << "ingested " << ingested.stations.size() << " stations, " << ingested.rows_read
              << " rows (" << ingested.rows_dropped_nonfinite << " dropped non-finite)\n";
    fpld::CleanedData data = fpld::clean(ingested.stations, options.min_obs);
    std::cerr << "cleaning: kept " << data.counts.stations_kept << " of "
              << data.counts.stations_in << " stations, removed "
              << data.counts.negative_records_removed << " negative-range records\n";
    return data;
}

void report_emitted(const std::vector<std::string>& paths) {
    for (const std::string& path : paths) std::cout << path << "\n";
}

int run_fit_command(const CommonOptions& common, const PipelineOptions& options) {
    const fpld::CleanedData data = load_and_clean(options);
    std::vector<fpld::ModelSpec> models;
    for (const std::string& name : options.distributions) {
        fpld::ModelSpec spec = fpld::model_spec_from_string(name);
        spec.estimator = fpld::estimator_from_string(options.estimator);
        models.push_back(spec);
    }
    const bool observation_pairing = options.perm_pairing == "observation";
    fpld::EvalReport report = fpld::run_marginal(
        data, models, make_fit_config(options), fpld::resolve_threads(common.threads),
        options.plot_data, options.perm_test && observation_pairing);
    if (options.perm_test && models.size() > 1) {
        report.permutation_tests = fpld::permutation_tests(
            report,
            observation_pairing ? fpld::PermutationPairing::observation
                                : fpld::PermutationPairing::station,
            options.perm_count, common.seed);
        for (fpld::EvalRow& row : report.rows) row.crps_per_obs.clear();
    }
    for (const std::string& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
    report_emitted(fpld::emit(report, {common.format, options.plot_data}, common.out_dir));
    return 0;
}

int run_regress_command(const CommonOptions& common, const PipelineOptions& options,
                        const std::string& mode) {
    const fpld::CleanedData data = load_and_clean(options);
    const fpld::RegressionMode regression_mode =
        mode == "in-sample" ? fpld::RegressionMode::in_sample : fpld::RegressionMode::loocv;
    const fpld::EvalReport report = fpld::run_regression(
        data, regression_mode, make_fit_config(options), fpld::resolve_threads(common.threads),
        options.plot_data);
    for (const std::string& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
    std::cerr << "quantile-regression bundles fitted: " << report.bundle_fits << "\n";
    report_emitted(fpld::emit(report, {common.format, options.plot_data}, common.out_dir));
    return 0;
}

int run_simulate_command(const CommonOptions& common, std::size_t replicates, int min_exponent,
                         int max_exponent, const std::vector<std::string>& estimators,
                         const std::string& skill_mode, std::size_t mc_samples,
                         bool finite_support, bool with_timings) {
    fpld::SimConfig config;
    config.replicates = replicates;
    config.sample_size_exponents.clear();
    for (int e = min_exponent; e <= max_exponent; ++e) config.sample_size_exponents.push_back(e);
    config.estimators.clear();
    for (const std::string& name : estimators)
        config.estimators.push_back(fpld::estimator_from_string(name));
    config.seed = common.seed;
    config.skill_mode =
        skill_mode == "expected" ? fpld::SkillMode::expected : fpld::SkillMode::empirical;
    config.mc_samples = mc_samples;
    config.require_finite_support = finite_support;
    config.fit.enforce_positive_support = true;
    config.threads = fpld::resolve_threads(common.threads);

    const fpld::SimResult result = fpld::run_simulation(config);

    namespace fs = std::filesystem;
    fs::create_directories(common.out_dir);
    const bool want_csv = common.format == "csv" || common.format == "both";
    const bool want_json = common.format == "json" || common.format == "both";

    if (want_csv) {
        const std::string path = (fs::path(common.out_dir) / "table1.csv").string();
        std::ofstream stream(path, std::ios::binary);
        stream << "metric,estimator";
        for (int e = min_exponent; e <= max_exponent; ++e)
            stream << ",n=" << (std::size_t{1} << e);
        stream << "\n";
        auto write_metric = [&](const std::string& metric, auto getter) {
            for (fpld::Estimator estimator : config.estimators) {
                stream << metric << ',' << fpld::to_string(estimator);
                for (int e = min_exponent; e <= max_exponent; ++e) {
                    const std::size_t n = std::size_t{1} << e;
                    for (const fpld::SimCell& cell : result.summary)
                        if (cell.estimator == estimator && cell.n == n)
                            stream << ',' << fpld::format_double(getter(cell));
                }
                stream << "\n";
            }
        };
        write_metric("skill_x1e3", [](const fpld::SimCell& c) { return 1e3 * c.mean_skill; });
        write_metric("mse", [](const fpld::SimCell& c) { return c.mse; });
        if (with_timings)
            write_metric("time_s", [](const fpld::SimCell& c) { return c.mean_seconds; });
        write_metric("excluded",
                     [](const fpld::SimCell& c) { return static_cast<double>(c.excluded); });
        std::cout << path << "\n";
    }
    if (want_json) {
        json rows = json::array();
        for (const fpld::SimRow& row : result.rows) {
            rows.push_back({{"replicate", row.replicate},
                            {"n", row.n},
                            {"estimator", fpld::to_string(row.estimator)},
                            {"skill", std::isfinite(row.skill) ? json(row.skill) : json()},
                            {"mse", std::isfinite(row.mse) ? json(row.mse) : json()},
                            {"elapsed_ms", with_timings ? row.elapsed_seconds * 1e3 : 0.0},
                            {"converged", row.converged},
                            {"truth", fpld::params_to_json(row.truth)},
                            {"estimate", fpld::params_to_json(row.estimate)}});
        }
        const std::string path = (fs::path(common.out_dir) / "simulation.json").string();
        std::ofstream stream(path, std::ios::binary);
        stream << json{{"rows", std::move(rows)}}.dump(2) << '\n';
        std::cout << path << "\n";
    }
    return 0;
}

int run_crps_command(const CommonOptions& common, const std::string& params_arg,
                     const std::string& input_path, const std::string& out_path) {
    json params_json;
    if (!params_arg.empty() && params_arg.front() == '{') {
        params_json = json::parse(params_arg);
    } else {
        std::ifstream stream(params_arg);
        if (!stream) throw std::domain_error("cannot open " + params_arg);
        params_json = json::parse(stream);
    }
    const fpld::FpldNatural params = fpld::params_from_json(params_json);

    std::ifstream stream(input_path);
    if (!stream) throw std::domain_error("cannot open " + input_path);
    std::vector<double> observations;
    double value = 0.0;
    while (stream >> value) observations.push_back(value);
    if (observations.empty()) throw std::domain_error("crps: no observations in " + input_path);

    const int threads = fpld::resolve_threads(common.threads);
    const double score = fpld::mean_crps(params, observations, threads);
    std::vector<double> pit(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i)
        pit[i] = fpld::cdf(params, observations[i]);
    const fpld::PitErrors errors = fpld::pit_errors(pit);

    const json output{{"mean_crps", score},
                      {"e_mu", errors.e_mu},
                      {"e_sigma", errors.e_sigma},
                      {"n_obs", observations.size()}};
    std::cout << output.dump(2) << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        out << output.dump(2) << '\n';
    }
    return 0;
}

int run_check_command(const CommonOptions& common) {
    fpld::Rng rng(common.seed == 0 ? 20260809ULL : common.seed);
    bool all_ok = true;
    auto report = [&](const std::string& name, bool ok, double worst) {
        std::printf("%s %-34s worst error %.3e\n", ok ? "PASS" : "FAIL", name.c_str(), worst);
        all_ok = all_ok && ok;
    };

    auto draw = [&]() {
        for (;;) {
            fpld::FpldStar star{rng.normal(5.0, 3.0), rng.uniform(1.5, 8.0),
                                rng.uniform(-0.9, 0.9), rng.uniform(0.01, 0.9),
                                rng.uniform(-0.3, 0.7)};
            const fpld::FpldNatural natural = fpld::from_star(star);
            if (fpld::quantile(natural, 0.0) > 0.0 &&
                fpld::quantile(natural, 1.0) - fpld::quantile(natural, 0.0) > 1.0)
                return star;
        }
    };

    {
        double worst = 0.0;
        for (int i = 0; i < 60; ++i) {
            fpld::FpldStar star = draw();
            if (i % 3 == 0) star.left_shape = 1e-8;
            if (i % 3 == 1) star.right_shape = -1e-8;
            const fpld::FpldNatural d = fpld::from_star(star);
            const double y = fpld::quantile(d, rng.uniform_open01());
            const double closed = fpld::crps_fpld(d, y);
            const double oracle = fpld::crps_quadrature(
                [&](double t) { return fpld::cdf(d, t); }, fpld::support(d), y);
            worst = std::max(worst, std::abs(closed - oracle));
        }
        report("crps closed form vs quadrature", worst <= 1e-6, worst);
    }
    {
        double worst = 0.0;
        for (int i = 0; i < 40; ++i) {
            const fpld::FpldNatural d = fpld::from_star(draw());
            for (int j = 1; j < 50; ++j) {
                const double p = j / 50.0;
                worst = std::max(worst, std::abs(fpld::cdf(d, fpld::quantile(d, p)) - p));
            }
        }
        report("cdf/quantile inverse consistency", worst <= 1e-9, worst);
    }
    {
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const fpld::FpldStar star = draw();
            const fpld::FpldStar back = fpld::to_star(fpld::from_star(star));
            const fpld::FpldStar round =
                fpld::from_unconstrained(fpld::to_unconstrained(star));
            for (double d : {back.median - star.median, back.iqr - star.iqr,
                             round.median - star.median, round.iqr - star.iqr,
                             round.tail_weight - star.tail_weight,
                             round.left_shape - star.left_shape,
                             round.right_shape - star.right_shape})
                worst = std::max(worst, std::abs(d));
        }
        report("reparametrisation roundtrips", worst <= 1e-10, worst);
    }
    {
        const auto power_term = [](double log_x, double shape) {
            return std::abs(shape) < 1e-10 ? log_x : std::expm1(shape * log_x) / shape;
        };
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const fpld::GpdParams max_tail{rng.uniform(0.0, 5.0), rng.uniform(0.5, 3.0),
                                           rng.uniform(-0.4, 1.0)};
            const fpld::GpdParams min_tail{rng.uniform(0.0, 5.0), rng.uniform(0.5, 3.0),
                                           rng.uniform(-0.4, 1.0)};
            const double a = rng.uniform(0.5, 2.0);
            const fpld::FpldNatural combined = fpld::fpld_from_gpd_pair(max_tail, min_tail, a);
            for (int j = 1; j < 100; ++j) {
                const double p = j / 100.0;
                const double direct =
                    max_tail.location + min_tail.location -
                    max_tail.scale * power_term(std::log1p(-p), max_tail.shape) -
                    min_tail.scale * power_term(a * std::log(p), min_tail.shape);
                worst = std::max(worst, std::abs(fpld::quantile(combined, p) - direct));
            }
        }
        report("gpd-difference identity", worst <= 1e-10, worst);
    }
    if (!all_ok) throw std::runtime_error("oracle self-check failed");
    return 0;
}

// A JSON config file may supply any long option; explicit command-line flags
// win because they are parsed after the injected tokens.
std::vector<std::string> inject_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    std::ifstream stream(config_path);
    if (!stream) throw std::domain_error("cannot open config " + config_path);
    const json config = json::parse(stream);
    std::vector<std::string> injected;
    for (const auto& [key, value] : config.items()) {
        if (value.is_array()) {
            for (const auto& item : value) {
                injected.push_back("--" + key);
                injected.push_back(item.is_string() ? item.get<std::string>() : item.dump());
            }
        } else if (value.is_boolean()) {
            if (value.get<bool>())
                injected.push_back("--" + key);
            else if (key == "positive-support")
                injected.push_back("--no-positive-support");
            // other flags default to false; nothing to inject
        } else {
            injected.push_back("--" + key);
            injected.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    // Insert after the subcommand name so the options bind to it.
    std::vector<std::string> result;
    std::size_t insert_at = args.empty() ? 0 : 1;
    result.insert(result.end(), args.begin(), args.begin() + insert_at);
    result.insert(result.end(), injected.begin(), injected.end());
    result.insert(result.end(), args.begin() + insert_at, args.end());
    return result;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Five-parameter lambda distribution modelling of diurnal temperature range"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file supplying any option")
        ->expected(1);

    CommonOptions common;
    PipelineOptions pipeline;
    std::string regress_mode = "loocv";
    std::size_t replicates = 50;  // desk scale; the full study is opt-in
    int min_exponent = 7;
    int max_exponent = 12;
    std::vector<std::string> estimators = {"mq", "ml", "starship"};
    std::string skill_mode = "empirical";
    std::size_t mc_samples = 1000;
    bool finite_support = false;
    bool with_timings = false;
    std::string params_arg;
    std::string crps_input;
    std::string crps_out;

    CLI::App* fit_cmd = app.add_subcommand("fit", "Marginal fits per station and season");
    add_common(fit_cmd, common);
    add_pipeline_inputs(fit_cmd, pipeline);
    fit_cmd->add_option("--estimator", pipeline.estimator, "FPLD estimator")
        ->check(CLI::IsMember({"mq", "ml", "starship"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    fit_cmd->add_option("--distribution", pipeline.distributions,
                        "Distributions to fit (repeatable)")
        ->check(CLI::IsMember({"fpld", "fpld-sym", "gamma", "lognormal"}));
    fit_cmd->add_flag("--perm-test", pipeline.perm_test,
                      "Paired permutation tests of CRPS between fitted models");
    fit_cmd->add_option("--perm-pairing", pipeline.perm_pairing, "Pair scores per")
        ->check(CLI::IsMember({"station", "observation"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    fit_cmd->add_option("--perm-count", pipeline.perm_count, "Permutation count")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CLI::App* regress_cmd =
        app.add_subcommand("regress", "Distributional quantile regression across stations");
    add_common(regress_cmd, common);
    add_pipeline_inputs(regress_cmd, pipeline);
    regress_cmd->add_option("--mode", regress_mode, "Evaluation mode")
        ->check(CLI::IsMember({"in-sample", "loocv"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Estimator comparison study");
    add_common(simulate_cmd, common);
    simulate_cmd->add_option("--replicates", replicates, "Replicates per cell")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    simulate_cmd->add_option("--min-exponent", min_exponent, "Smallest n = 2^e")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    simulate_cmd->add_option("--max-exponent", max_exponent, "Largest n = 2^e")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    simulate_cmd->add_option("--estimators", estimators, "Estimators to compare")
        ->check(CLI::IsMember({"mq", "ml", "starship"}));
    simulate_cmd->add_option("--skill-mode", skill_mode, "Skill score mode")
        ->check(CLI::IsMember({"empirical", "expected"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    simulate_cmd->add_option("--mc-samples", mc_samples, "Monte-Carlo draws in expected mode")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    simulate_cmd->add_flag("--finite-support", finite_support,
                           "Reject truths with an infinite right tail");
    simulate_cmd->add_flag("--with-timings", with_timings,
                           "Include wall times in outputs (breaks byte-identical reruns)");

    CLI::App* crps_cmd = app.add_subcommand("crps", "Score parameters against observations");
    add_common(crps_cmd, common);
    crps_cmd->add_option("--params", params_arg, "Parameter JSON (inline or file path)")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    crps_cmd->add_option("--input", crps_input, "Observations, one value per line")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    crps_cmd->add_option("--out-file", crps_out, "Optional JSON output path")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CLI::App* check_cmd = app.add_subcommand("check", "Oracle-equivalence self test");
    add_common(check_cmd, common);

    try {
        std::vector<std::string> args = inject_config(argc, argv);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (fit_cmd->parsed()) return run_fit_command(common, pipeline);
        if (regress_cmd->parsed()) return run_regress_command(common, pipeline, regress_mode);
        if (simulate_cmd->parsed())
            return run_simulate_command(common, replicates, min_exponent, max_exponent,
                                        estimators, skill_mode, mc_samples, finite_support,
                                        with_timings);
        if (crps_cmd->parsed()) return run_crps_command(common, params_arg, crps_input, crps_out);
        if (check_cmd->parsed()) return run_check_command(common);
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
