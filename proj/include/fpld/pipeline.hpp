// Station data pipeline: CSV ingest, seasonal splitting and cleaning,
// covariates, marginal and regression model runs, and report emission.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpld/estimation.hpp"
#include "fpld/params.hpp"

namespace fpld {

enum class Season { winter, spring, summer, autumn };
constexpr std::array<Season, 4> kSeasons = {Season::winter, Season::spring, Season::summer,
                                            Season::autumn};

std::string to_string(Season season);
Season season_from_string(const std::string& name);

// DJF / MAM / JJA / SON by calendar month.
Season season_of_month(int month);

struct DailyRecord {
    int year = 0;
    int month = 0;
    int day = 0;
    double tmin = 0.0;
    double tmax = 0.0;
    double tmean = 0.0;  // NaN when the daily mean is missing
    double dtr = 0.0;    // tmax - tmin
};

struct StationMeta {
    std::string id;
    double easting = 0.0;          // metres
    double northing = 0.0;         // metres
    double altitude = 0.0;         // metres
    double distance_to_sea = 0.0;  // metres
};

struct StationSeries {
    StationMeta meta;
    std::vector<DailyRecord> records;  // date-sorted, dates unique
};

struct IngestResult {
    std::vector<StationSeries> stations;
    std::size_t rows_read = 0;
    std::size_t rows_dropped_nonfinite = 0;
    std::vector<std::string> warnings;
};

// Parse the observations CSV (station_id, date, tmin, tmax, tmean) and the
// stations CSV (station_id, easting, northing, altitude, distance_to_sea).
// Schema violations raise std::domain_error naming file, line and column.
IngestResult ingest(const std::string& observations_path, const std::string& stations_path);

inline constexpr std::array<const char*, 6> kCovariateNames = {
    "easting", "northing", "distance_to_sea", "altitude", "tmean_mean", "tmean_variance"};

// Geographic covariates plus seasonal mean and variance (divisor n-1) of the
// daily mean temperature. Throws when the season has no tmean coverage.
std::array<double, 6> seasonal_covariates(const StationSeries& station, Season season);

struct SeasonalDataset {
    Season season = Season::winter;
    std::vector<std::string> station_ids;
    std::vector<std::vector<double>> dtr;               // per station
    std::vector<std::array<double, 6>> covariates;      // per station
};

struct CleanCounts {
    std::size_t stations_in = 0;
    std::size_t stations_kept = 0;
    std::size_t stations_dropped = 0;
    std::size_t negative_records_removed = 0;
};

struct CleanedData {
    std::vector<StationSeries> stations;  // retained stations, negatives removed
    std::array<SeasonalDataset, 4> seasons;
    CleanCounts counts;
};

// Remove negative-range records, then drop every station with fewer than
// min_per_season observations in any season.
CleanedData clean(const std::vector<StationSeries>& stations, std::size_t min_per_season = 180);

enum class ModelKind { fpld, fpld_sym, gamma, lognormal };

struct ModelSpec {
    ModelKind kind = ModelKind::fpld;
    Estimator estimator = Estimator::mq;  // used by the FPLD variants

    std::string name() const;
};

ModelSpec model_spec_from_string(const std::string& name);

struct EvalRow {
    std::string station_id;
    Season season = Season::winter;
    std::string model;
    double mean_crps = 0.0;
    double e_mu = 0.0;
    double e_sigma = 0.0;
    std::size_t n_obs = 0;
    std::optional<FpldStar> params;  // FPLD-family models only
    bool fit_ok = true;
    std::string note;  // failure message when fit_ok is false
    // Present only when plot data collection was requested.
    std::vector<std::pair<double, double>> qq;
    std::vector<double> pit;
    // Present only when observation-level score collection was requested.
    std::vector<double> crps_per_obs;
};

struct CoefficientSummary {
    Season season = Season::winter;
    std::string covariate;
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Paired comparisons run per station (mean scores paired by station) or per
// observation (daily scores paired by day across every retained station).
enum class PermutationPairing { station, observation };

struct PermutationTestResult {
    Season season = Season::winter;
    std::string model_a;
    std::string model_b;
    double p_value = 1.0;
    std::size_t pairs = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // ordered by (season, station_id, model)
    std::vector<CoefficientSummary> median_regression_coefficients;
    std::vector<PermutationTestResult> permutation_tests;
    std::size_t bundle_fits = 0;  // quantile-regression bundle estimations performed
    std::vector<std::string> warnings;
};

// Per station and season: FPLD fits for the selected models plus baselines,
// with closed-form CRPS for the FPLD and quadrature CRPS for the baselines.
// Individual fit failures are recorded and the run continues.
EvalReport run_marginal(const CleanedData& data, const std::vector<ModelSpec>& models,
                        const FitConfig& config, int threads = 1,
                        bool collect_plot_data = false,
                        bool collect_observation_scores = false);

// Two-sided sign-flip tests of the mean CRPS difference for every model pair
// sharing rows in the report; observation pairing requires rows carrying
// per-observation scores.
std::vector<PermutationTestResult> permutation_tests(const EvalReport& report,
                                                     PermutationPairing pairing,
                                                     std::size_t n_perm, std::uint64_t seed);

enum class RegressionMode { in_sample, loocv };

// Distributional quantile regression per season; loocv refits the bundle
// once per held-out station.
EvalReport run_regression(const CleanedData& data, RegressionMode mode, const FitConfig& config,
                          int threads = 1, bool collect_plot_data = false);

struct EmitOptions {
    std::string format = "csv";  // csv | json | both
    bool with_plot_data = false;
};

// Write the report tables under out_dir; returns the written paths.
// Output is byte-identical across reruns on identical inputs.
std::vector<std::string> emit(const EvalReport& report, const EmitOptions& options,
                              const std::string& out_dir);

// Load a report back from its JSON form.
EvalReport read_eval_report(const std::string& json_path);

}  // namespace fpld
