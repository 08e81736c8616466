// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Criterion 10 is skipped unless the station dataset is
// present (FPLD_DATA_DIR or ./data).
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "helpers.hpp"

#include "fpld/distribution.hpp"
#include "fpld/estimation.hpp"
#include "fpld/pipeline.hpp"
#include "fpld/quantreg.hpp"
#include "fpld/rng.hpp"
#include "fpld/scoring.hpp"
#include "fpld/serde.hpp"
#include "fpld/simstudy.hpp"

using namespace fpld;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void skip(int criterion, const std::string& detail) {
    std::printf("SKIP criterion %2d: %s\n", criterion, detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buffer[256];
    std::snprintf(buffer, sizeof buffer, pattern, a, b, c);
    return buffer;
}

// 1. CRPS closed form vs quadrature oracle, including near-zero tail shapes.
void criterion_1() {
    Rng rng(9001);
    double worst = 0.0;
    int near_zero = 0;
    for (int i = 0; i < 200; ++i) {
        FpldStar star = sample_lambda_star(rng);
        if (i % 5 == 0) {
            star.left_shape = rng.uniform(-1e-8, 1e-8);
            ++near_zero;
        } else if (i % 5 == 1) {
            star.right_shape = rng.uniform(-1e-8, 1e-8);
            ++near_zero;
        }
        const FpldNatural d = from_star(star);
        const double y = quantile(d, rng.uniform_open01());
        const double closed = crps_fpld(d, y);
        const double oracle =
            crps_quadrature([&](double t) { return cdf(d, t); }, support(d), y);
        worst = std::max(worst, std::abs(closed - oracle));
    }
    report(1, worst <= 1e-6 && near_zero >= 20,
           fmt("crps closed form vs quadrature, 200 cases (%.0f near-zero shapes), "
               "worst |diff| = %.3g (tol 1e-6)",
               static_cast<double>(near_zero), worst));
}

// 2. CDF/quantile inverse consistency.
void criterion_2() {
    Rng rng(9002);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const FpldNatural d = from_star(sample_lambda_star(rng));
        for (int j = 0; j < 50; ++j) {
            const double p = rng.uniform_open01();
            worst = std::max(worst, std::abs(cdf(d, quantile(d, p)) - p));
        }
    }
    report(2, worst <= 1e-9,
           fmt("cdf(quantile(p)) roundtrip over 100x50 cases, worst |diff| = %.3g (tol 1e-9)",
               worst));
}

// 3. GPD-difference identity.
void criterion_3() {
    // The direct two-tail expression keeps the linked probability in log
    // form; 1 - p^a would round away the digits the tolerance asks for.
    const auto power_term = [](double log_x, double shape) {
        return std::abs(shape) < 1e-10 ? log_x : std::expm1(shape * log_x) / shape;
    };
    Rng rng(9003);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const GpdParams max_tail{rng.uniform(-1.0, 6.0), rng.uniform(0.3, 3.0),
                                 rng.uniform(-0.5, 1.2)};
        const GpdParams min_tail{rng.uniform(-1.0, 6.0), rng.uniform(0.3, 3.0),
                                 rng.uniform(-0.5, 1.2)};
        const double a = rng.uniform(0.4, 2.5);
        const FpldNatural combined = fpld_from_gpd_pair(max_tail, min_tail, a);
        for (int j = 1; j <= 99; ++j) {
            const double p = j / 100.0;
            const double direct = max_tail.location + min_tail.location -
                                  max_tail.scale * power_term(std::log1p(-p), max_tail.shape) -
                                  min_tail.scale * power_term(a * std::log(p), min_tail.shape);
            worst = std::max(worst, std::abs(quantile(combined, p) - direct));
        }
    }
    report(3, worst <= 1e-10,
           fmt("gpd-difference identity over 100 pairs, worst |diff| = %.3g (tol 1e-10)", worst));
}

// 4. Reparametrisation roundtrips with stress scales.
void criterion_4() {
    Rng rng(9004);
    double worst = 0.0;
    auto stress = [&](const FpldStar& star) {
        const FpldStar unc = from_unconstrained(to_unconstrained(star));
        const FpldNatural nat = from_star(star);
        const FpldStar back = to_star(nat);
        for (double d :
             {unc.median - star.median, unc.iqr - star.iqr, unc.tail_weight - star.tail_weight,
              unc.left_shape - star.left_shape, unc.right_shape - star.right_shape,
              back.median - star.median, back.iqr - star.iqr})
            worst = std::max(worst, std::abs(d));
    };
    for (int i = 0; i < 1000; ++i) {
        FpldStar star{rng.normal(5.0, 3.0), rng.uniform(0.2, 10.0), rng.uniform(-0.95, 0.95),
                      rng.uniform(0.02, 2.5), rng.uniform(-0.45, 2.5)};
        if (i == 0) star.iqr = 1e-4;
        if (i == 1) star.iqr = 500.0;
        stress(star);
    }
    report(4, worst <= 1e-10,
           fmt("reparametrisation roundtrips over 1000 sets incl. iqr 1e-4/500, worst "
               "componentwise error = %.3g (tol 1e-10)",
               worst));
}

// 5. Table-1 shape at desk scale.
void criterion_5() {
    SimConfig config;
    config.replicates = 50;
    config.sample_size_exponents = {7, 8, 9, 10, 11, 12};
    config.estimators = {Estimator::mq, Estimator::ml, Estimator::starship};
    config.seed = 2024;
    config.fit.enforce_positive_support = true;
    config.threads = 0;  // hardware
    const SimResult result = run_simulation(config);

    auto cell = [&](Estimator estimator, int exponent) -> const SimCell& {
        const std::size_t n = std::size_t{1} << exponent;
        for (const SimCell& c : result.summary)
            if (c.estimator == estimator && c.n == n) return c;
        throw std::logic_error("missing summary cell");
    };

    // (a) mean skill decreases with n, at most one noise inversion
    bool trend_ok = true;
    std::string trend_detail;
    for (Estimator estimator : config.estimators) {
        int inversions = 0;
        for (std::size_t k = 1; k < config.sample_size_exponents.size(); ++k) {
            const double previous =
                cell(estimator, config.sample_size_exponents[k - 1]).mean_skill;
            const double current = cell(estimator, config.sample_size_exponents[k]).mean_skill;
            if (current > previous) ++inversions;
        }
        trend_detail += to_string(estimator) + ":" + std::to_string(inversions) + " ";
        trend_ok = trend_ok && inversions <= 1;
    }
    report(5, trend_ok, "5a mean skill decreasing in n (inversions allowed <= 1): " + trend_detail);

    // (b) MQ and ML mean skill at n = 2^12 within a factor of 3
    const double skill_mq = cell(Estimator::mq, 12).mean_skill;
    const double skill_ml = cell(Estimator::ml, 12).mean_skill;
    const bool factor_ok =
        skill_mq > 0.0 && skill_ml > 0.0 && skill_mq <= 3.0 * skill_ml && skill_ml <= 3.0 * skill_mq;
    report(5, factor_ok,
           fmt("5b skill factor at n=4096: mq %.3gx1e-3 vs ml %.3gx1e-3 (factor <= 3)",
               1e3 * skill_mq, 1e3 * skill_ml));

    // (c) MQ is the fastest estimator for n >= 2^10
    bool time_ok = true;
    for (int exponent : {10, 11, 12}) {
        const double mq_time = cell(Estimator::mq, exponent).mean_seconds;
        time_ok = time_ok && mq_time < cell(Estimator::ml, exponent).mean_seconds &&
                  mq_time < cell(Estimator::starship, exponent).mean_seconds;
    }
    report(5, time_ok,
           fmt("5c timing order at n>=1024: mq %.2gs / ml %.2gs / starship %.2gs at n=4096",
               cell(Estimator::mq, 12).mean_seconds, cell(Estimator::ml, 12).mean_seconds,
               cell(Estimator::starship, 12).mean_seconds));

    // (d) ML parameter MSE below MQ at every n
    bool mse_ok = true;
    std::string mse_detail;
    for (int exponent : config.sample_size_exponents) {
        const double ml_mse = cell(Estimator::ml, exponent).mse;
        const double mq_mse = cell(Estimator::mq, exponent).mse;
        mse_ok = mse_ok && ml_mse < mq_mse;
        mse_detail += fmt("n=%g ml %.3g vs mq %.3g; ", std::pow(2.0, exponent), ml_mse, mq_mse);
    }
    report(5, mse_ok, "5d ML MSE < MQ MSE at every n: " + mse_detail);
}

// 6. Uniform special case.
void criterion_6() {
    const FpldNatural uniform{0.0, 2.0, 0.0, 1.0, 1.0};
    const double density_mid = density(uniform, 0.0);
    const double crps_mid = crps_fpld(uniform, 0.0);
    const SupportInterval sup = support(uniform);
    const bool ok = std::abs(density_mid - 0.5) <= 1e-12 &&
                    std::abs(crps_mid - 1.0 / 6.0) <= 1e-8 && sup.lower == -1.0 &&
                    sup.upper == 1.0;
    report(6, ok,
           fmt("uniform case: density(0) = %.12g, crps(0) = %.12g, support [-1, 1] exact",
               density_mid, crps_mid));
}

// 7. PIT calibration of the true model.
void criterion_7() {
    Rng rng(9007);
    double worst_mu = 0.0, worst_sigma = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const FpldNatural d = from_star(sample_lambda_star(rng));
        const auto y = sample(d, 10000, rng.next_u64());
        std::vector<double> pit(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) pit[i] = cdf(d, y[i]);
        const PitErrors errors = pit_errors(pit);
        worst_mu = std::max(worst_mu, std::abs(errors.e_mu));
        worst_sigma = std::max(worst_sigma, std::abs(errors.e_sigma));
    }
    report(7, worst_mu <= 0.01 && worst_sigma <= 0.01,
           fmt("true-model PIT over 20 truths at n=1e4: worst |e_mu| = %.3g, worst |e_sigma| = "
               "%.3g (tol 0.01)",
               worst_mu, worst_sigma));
}

// 8. Quantile regression recovery with heteroscedastic noise.
void criterion_8() {
    Rng rng(9008);
    const std::size_t n = 5000;
    Eigen::MatrixXd raw(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        raw(r, 0) = rng.normal(0.0, 1.0);
        raw(r, 1) = rng.uniform(-2.0, 2.0);
        const double sd = 0.5 + 0.25 * std::abs(raw(r, 0));
        y[r] = 2.0 + 3.0 * raw(r, 0) - 1.0 * raw(r, 1) + rng.normal(0.0, sd);
    }
    const Design design = standardize({"x1", "x2"}, raw, y);
    const QuantileFit median_fit = fit_quantile_regression(design, 0.5);
    // slopes in raw units = standardized slope / sd
    const double b0 = median_fit.beta[0];
    const double b1 = median_fit.beta[1] / design.standardization.sd[0];
    const double b2 = median_fit.beta[2] / design.standardization.sd[1];
    // the intercept in raw units shifts by the covariate means
    const double intercept = b0 - b1 * design.standardization.mean[0] -
                             b2 * design.standardization.mean[1];
    const bool beta_ok = std::abs(intercept - 2.0) <= 0.1 && std::abs(b1 - 3.0) <= 0.1 &&
                         std::abs(b2 + 1.0) <= 0.1;

    bool bounds_ok = true;
    const QuantileFitBundle bundle = fit_bundle(design, 0);
    for (const QuantileFit& fit : bundle.fits) {
        const auto [negative, nonpositive] = residual_sign_counts(design, fit.beta);
        const double np = fit.p * static_cast<double>(n);
        bounds_ok = bounds_ok && static_cast<double>(negative) <= np &&
                    static_cast<double>(nonpositive) >= np - 3.0;
    }
    report(8, beta_ok && bounds_ok,
           fmt("median regression recovered (%.3g, %.3g, %.3g) vs (2, 3, -1) +-0.1; "
               "subgradient bounds over 99 fits",
               intercept, b1, b2));
}

// 9. Distributional-regression consistency on shared-FPLD stations. The
// station count must clear the seven regression coefficients and each
// station needs enough days for its PIT moments to resolve below the 0.02
// bound, hence 14 stations over 10 years with PIT pooled per station.
void criterion_9() {
    const FpldStar truth{6.0, 3.0, 0.2, 0.4, 0.2};
    testing::SyntheticOptions options;
    options.n_stations = 14;
    options.years = 10;
    options.seed = 9009;
    const CleanedData data = clean(testing::make_synthetic_stations(truth, options), 180);

    FitConfig config;
    config.enforce_positive_support = true;
    const EvalReport loocv =
        run_regression(data, RegressionMode::loocv, config, 0, /*collect_plot_data=*/true);
    const EvalReport marginal = run_marginal(data, {{ModelKind::fpld, Estimator::mq}}, config, 0);

    double loocv_mean = 0.0, marginal_mean = 0.0;
    std::map<std::string, std::vector<double>> pit_by_station;
    for (const EvalRow& row : loocv.rows) {
        loocv_mean += row.mean_crps / static_cast<double>(loocv.rows.size());
        auto& pooled = pit_by_station[row.station_id];
        pooled.insert(pooled.end(), row.pit.begin(), row.pit.end());
    }
    for (const EvalRow& row : marginal.rows)
        marginal_mean += row.mean_crps / static_cast<double>(marginal.rows.size());

    double worst_mu = 0.0, worst_sigma = 0.0;
    for (const auto& [station, pooled] : pit_by_station) {
        const PitErrors errors = pit_errors(pooled);
        worst_mu = std::max(worst_mu, std::abs(errors.e_mu));
        worst_sigma = std::max(worst_sigma, std::abs(errors.e_sigma));
    }
    const double gap = std::abs(loocv_mean / marginal_mean - 1.0);
    report(9, gap <= 0.05 && worst_mu <= 0.02 && worst_sigma <= 0.02,
           fmt("loocv vs marginal CRPS gap = %.3g (tol 0.05); per-station |e_mu| <= %.3g, "
               "|e_sigma| <= %.3g (tol 0.02)",
               gap, worst_mu, worst_sigma));
}

// 10. Norwegian data reproduction, when the dataset is available.
void criterion_10() {
    std::string data_dir = "data";
    if (const char* env = std::getenv("FPLD_DATA_DIR")) data_dir = env;
    const fs::path observations = fs::path(data_dir) / "observations.csv";
    const fs::path stations = fs::path(data_dir) / "stations.csv";
    if (!fs::exists(observations) || !fs::exists(stations)) {
        skip(10, "station dataset not available (set FPLD_DATA_DIR); criteria 1-9 constitute "
                 "acceptance");
        return;
    }
    const IngestResult ingested = ingest(observations.string(), stations.string());
    const CleanedData data = clean(ingested.stations, 180);
    FitConfig config;
    config.enforce_positive_support = true;
    const std::vector<ModelSpec> models = {{ModelKind::fpld, Estimator::mq},
                                           {ModelKind::gamma, Estimator::mq},
                                           {ModelKind::lognormal, Estimator::mq}};
    const EvalReport report_rows = run_marginal(data, models, config, 0);

    std::map<std::pair<int, std::string>, std::pair<double, std::size_t>> sums;
    std::map<int, std::pair<double, double>> worst_pit;
    for (const EvalRow& row : report_rows.rows) {
        if (!row.fit_ok) continue;
        auto& [sum, count] = sums[{static_cast<int>(row.season), row.model}];
        sum += row.mean_crps;
        ++count;
        if (row.model == "fpld-mq") {
            auto& [mu, sigma] = worst_pit[static_cast<int>(row.season)];
            mu = std::max(mu, std::abs(row.e_mu));
            sigma = std::max(sigma, std::abs(row.e_sigma));
        }
    }
    auto mean_of = [&](Season season, const std::string& model) {
        const auto& [sum, count] = sums.at({static_cast<int>(season), model});
        return sum / static_cast<double>(count);
    };
    const double winter_fpld = mean_of(Season::winter, "fpld-mq");
    bool ordering = true;
    for (Season season : kSeasons)
        ordering = ordering && mean_of(season, "fpld-mq") <= mean_of(season, "gamma") &&
                   mean_of(season, "gamma") <= mean_of(season, "lognormal");
    bool pit_ok = true;
    // Table-3 marginal PIT errors: season means of magnitude <= 5e-3
    for (Season season : kSeasons) {
        double mu_sum = 0.0, sigma_sum = 0.0;
        std::size_t count = 0;
        for (const EvalRow& row : report_rows.rows) {
            if (row.model != "fpld-mq" || row.season != season || !row.fit_ok) continue;
            mu_sum += row.e_mu;
            sigma_sum += row.e_sigma;
            ++count;
        }
        pit_ok = pit_ok && std::abs(mu_sum / count) <= 5e-3 && std::abs(sigma_sum / count) <= 5e-3;
    }
    report(10,
           std::abs(winter_fpld - 1.577) <= 0.01 && ordering && pit_ok,
           fmt("winter FPLD(MQ) mean CRPS = %.4g (expect 1.577 +- 0.01); model ordering and PIT "
               "magnitudes checked",
               winter_fpld));
}

// 11. CLI determinism: byte-identical reruns.
void criterion_11() {
#ifndef FPLD_CLI_PATH
    skip(11, "CLI path not provided at build time");
#else
    const std::string cli = FPLD_CLI_PATH;
    const fs::path work = fs::temp_directory_path() / "fpld_acceptance_cli";
    fs::remove_all(work);
    fs::create_directories(work);

    const FpldStar truth{6.0, 3.0, 0.2, 0.4, 0.2};
    testing::SyntheticOptions options;
    options.n_stations = 4;
    options.years = 1;
    options.seed = 9011;
    const auto stations = testing::make_synthetic_stations(truth, options);
    const std::string obs = (work / "obs.csv").string();
    const std::string meta = (work / "stations.csv").string();
    testing::write_fixture_csvs(stations, obs, meta);
    {
        std::ofstream params(work / "params.json");
        params << params_to_json(truth).dump() << '\n';
        std::ofstream values(work / "values.txt");
        for (int i = 0; i < 50; ++i) values << (5.0 + 0.01 * i) << '\n';
    }

    auto run = [&](const std::string& command) {
        const std::string full = cli + " " + command + " > /dev/null 2>&1";
        return std::system(full.c_str()) == 0;
    };
    auto dir_digest = [&](const fs::path& dir) {
        std::string digest;
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const fs::path& file : files)
            digest += file.filename().string() + "\n" + testing::read_file(file.string()) + "\n";
        return digest;
    };

    bool ok = true;
    std::string detail;
    const std::string common = " --input " + obs + " --stations " + meta + " --min-obs 30";
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"fit", "fit" + common + " --estimator mq --distribution fpld --format both"},
        {"regress", "regress" + common + " --mode loocv --format both"},
        {"simulate",
         "simulate --replicates 2 --min-exponent 7 --max-exponent 8 --estimators mq --seed 7 "
         "--format both"},
        {"crps", "crps --params " + (work / "params.json").string() + " --input " +
                     (work / "values.txt").string()},
    };
    for (const auto& [name, command] : commands) {
        const fs::path out_a = work / (name + "_a");
        const fs::path out_b = work / (name + "_b");
        std::string with_out_a = command;
        std::string with_out_b = command;
        if (name == "crps") {
            with_out_a += " --out-file " + (out_a / "crps.json").string();
            with_out_b += " --out-file " + (out_b / "crps.json").string();
            fs::create_directories(out_a);
            fs::create_directories(out_b);
        } else {
            with_out_a += " --out " + out_a.string();
            with_out_b += " --out " + out_b.string();
        }
        const bool ran = run(with_out_a) && run(with_out_b);
        const bool identical = ran && dir_digest(out_a) == dir_digest(out_b);
        ok = ok && identical;
        detail += name + (identical ? ":ok " : ":MISMATCH ");
    }
    report(11, ok, "CLI reruns byte-identical: " + detail);
    fs::remove_all(work);
#endif
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (failures > 0) {
        std::printf("ACCEPTANCE: %d check(s) failed\n", failures);
        return 1;
    }
    std::printf("ACCEPTANCE: all checks passed\n");
    return 0;
}
