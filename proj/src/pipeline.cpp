#include "fpld/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <stdexcept>

#include "fpld/distribution.hpp"
#include "fpld/numeric.hpp"
#include "fpld/parallel.hpp"
#include "fpld/quantreg.hpp"
#include "fpld/rng.hpp"
#include "fpld/scoring.hpp"
#include "fpld/serde.hpp"

namespace fpld {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;  // 1-based source line per row
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream stream(path);
    if (!stream) throw std::domain_error("cannot open " + path);
    CsvTable table;
    table.path = path;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (table.header.empty()) {
            table.header = split_csv_line(line);
            continue;
        }
        table.rows.push_back(split_csv_line(line));
        table.lines.push_back(line_number);
    }
    if (table.header.empty())
        throw std::domain_error(path + ": missing header line");
    return table;
}

std::size_t column_index(const CsvTable& table, const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end())
        throw std::domain_error(table.path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
}

const std::string& cell(const CsvTable& table, std::size_t row, std::size_t col,
                        const std::string& name) {
    if (col >= table.rows[row].size())
        throw std::domain_error(table.path + ":" + std::to_string(table.lines[row]) +
                                ": missing field for column '" + name + "'");
    return table.rows[row][col];
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

double parse_number(const CsvTable& table, std::size_t row, std::size_t col,
                    const std::string& name, bool allow_missing) {
    const std::string& s = cell(table, row, col, name);
    if (is_missing_token(s)) {
        if (allow_missing) return kNan;
        throw std::domain_error(table.path + ":" + std::to_string(table.lines[row]) +
                                ": column '" + name + "': missing value");
    }
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    const auto result = std::from_chars(begin, end, value);
    if (result.ec != std::errc{} || result.ptr != end)
        throw std::domain_error(table.path + ":" + std::to_string(table.lines[row]) +
                                ": column '" + name + "': invalid number '" + s + "'");
    return value;
}

void parse_date(const CsvTable& table, std::size_t row, std::size_t col, int& year, int& month,
                int& day) {
    const std::string& s = cell(table, row, col, "date");
    auto fail = [&]() -> void {
        throw std::domain_error(table.path + ":" + std::to_string(table.lines[row]) +
                                ": column 'date': invalid ISO date '" + s + "'");
    };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) fail();
    year = std::stoi(s.substr(0, 4));
    month = std::stoi(s.substr(5, 2));
    day = std::stoi(s.substr(8, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31) fail();
}

double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return kNan;
    const double h = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double t = h - static_cast<double>(lo);
    return values[lo] + t * (values[lo + 1] - values[lo]);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

nlohmann::json number_or_null(double value) {
    if (std::isnan(value)) return nullptr;
    return value;
}

double number_from(const nlohmann::json& value) {
    if (value.is_null()) return kNan;
    return value.get<double>();
}

EvalRow evaluate_model(const ModelSpec& spec, const std::string& station_id, Season season,
                       std::span<const double> dtr, const FitConfig& base_config,
                       bool collect_plot_data, bool collect_observation_scores) {
    EvalRow row;
    row.station_id = station_id;
    row.season = season;
    row.model = spec.name();
    row.n_obs = dtr.size();
    try {
        std::vector<double> pit(dtr.size());
        std::vector<double> scores(dtr.size());
        switch (spec.kind) {
            case ModelKind::fpld:
            case ModelKind::fpld_sym: {
                FitConfig config = base_config;
                config.estimator = spec.estimator;
                if (spec.kind == ModelKind::fpld_sym) config.fixed_tail_weight = 0.0;
                const FitResult fit_result = fit(dtr, config);
                const FpldNatural natural = from_star(fit_result.params);
                for (std::size_t i = 0; i < dtr.size(); ++i) {
                    scores[i] = crps_fpld(natural, dtr[i]);
                    pit[i] = cdf(natural, dtr[i]);
                }
                row.params = fit_result.params;
                if (!fit_result.converged) row.note = "fit did not converge";
                if (collect_plot_data) row.qq = qq_points(natural, dtr);
                break;
            }
            case ModelKind::gamma: {
                const GammaParams params = fit_gamma_ml(dtr);
                const auto cdf_fn = [params](double t) { return gamma_cdf(params, t); };
                const SupportInterval sup{0.0, std::numeric_limits<double>::infinity()};
                for (std::size_t i = 0; i < dtr.size(); ++i) {
                    scores[i] = crps_quadrature(cdf_fn, sup, dtr[i]);
                    pit[i] = cdf_fn(dtr[i]);
                }
                break;
            }
            case ModelKind::lognormal: {
                const LognormalParams params = fit_lognormal_ml(dtr);
                const auto cdf_fn = [params](double t) { return lognormal_cdf(params, t); };
                const SupportInterval sup{0.0, std::numeric_limits<double>::infinity()};
                for (std::size_t i = 0; i < dtr.size(); ++i) {
                    scores[i] = crps_quadrature(cdf_fn, sup, dtr[i]);
                    pit[i] = cdf_fn(dtr[i]);
                }
                break;
            }
        }
        row.mean_crps = pairwise_sum(scores) / static_cast<double>(scores.size());
        const PitErrors errors = pit_errors(pit);
        row.e_mu = errors.e_mu;
        row.e_sigma = errors.e_sigma;
        if (collect_plot_data) row.pit = std::move(pit);
        if (collect_observation_scores) row.crps_per_obs = std::move(scores);
    } catch (const std::exception& error) {
        row.fit_ok = false;
        row.mean_crps = kNan;
        row.e_mu = kNan;
        row.e_sigma = kNan;
        row.note = error.what();
    }
    return row;
}

void sort_rows(std::vector<EvalRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
        if (a.season != b.season) return static_cast<int>(a.season) < static_cast<int>(b.season);
        if (a.station_id != b.station_id) return a.station_id < b.station_id;
        return a.model < b.model;
    });
}

EvalRow evaluate_distributional(const std::string& station_id, Season season,
                                const FitResult& fit_result, std::span<const double> dtr,
                                bool collect_plot_data, std::string model_name) {
    EvalRow row;
    row.station_id = station_id;
    row.season = season;
    row.model = std::move(model_name);
    row.n_obs = dtr.size();
    const FpldNatural natural = from_star(fit_result.params);
    row.mean_crps = mean_crps(natural, dtr);
    std::vector<double> pit(dtr.size());
    for (std::size_t i = 0; i < dtr.size(); ++i) pit[i] = cdf(natural, dtr[i]);
    const PitErrors errors = pit_errors(pit);
    row.e_mu = errors.e_mu;
    row.e_sigma = errors.e_sigma;
    row.params = fit_result.params;
    if (!fit_result.converged) row.note = "fit did not converge";
    if (collect_plot_data) {
        row.qq = qq_points(natural, dtr);
        row.pit = std::move(pit);
    }
    return row;
}

}  // namespace

std::string to_string(Season season) {
    switch (season) {
        case Season::winter: return "winter";
        case Season::spring: return "spring";
        case Season::summer: return "summer";
        case Season::autumn: return "autumn";
    }
    return "winter";
}

Season season_from_string(const std::string& name) {
    for (Season season : kSeasons)
        if (to_string(season) == name) return season;
    throw std::domain_error("unknown season: " + name);
}

Season season_of_month(int month) {
    switch (month) {
        case 12: case 1: case 2: return Season::winter;
        case 3: case 4: case 5: return Season::spring;
        case 6: case 7: case 8: return Season::summer;
        case 9: case 10: case 11: return Season::autumn;
        default: throw std::domain_error("season_of_month: month outside 1..12");
    }
}

std::string ModelSpec::name() const {
    switch (kind) {
        case ModelKind::fpld: return "fpld-" + to_string(estimator);
        case ModelKind::fpld_sym: return "fpld-sym";
        case ModelKind::gamma: return "gamma";
        case ModelKind::lognormal: return "lognormal";
    }
    return "fpld";
}

ModelSpec model_spec_from_string(const std::string& name) {
    if (name == "fpld") return {ModelKind::fpld, Estimator::mq};
    if (name == "fpld-sym") return {ModelKind::fpld_sym, Estimator::mq};
    if (name == "gamma") return {ModelKind::gamma, Estimator::mq};
    if (name == "lognormal") return {ModelKind::lognormal, Estimator::mq};
    throw std::domain_error("unknown distribution: " + name);
}

IngestResult ingest(const std::string& observations_path, const std::string& stations_path) {
    IngestResult result;

    const CsvTable stations_table = read_csv(stations_path);
    const std::size_t sid = column_index(stations_table, "station_id");
    const std::size_t seast = column_index(stations_table, "easting");
    const std::size_t snorth = column_index(stations_table, "northing");
    const std::size_t salt = column_index(stations_table, "altitude");
    const std::size_t ssea = column_index(stations_table, "distance_to_sea");
    std::map<std::string, StationMeta> metadata;
    for (std::size_t r = 0; r < stations_table.rows.size(); ++r) {
        StationMeta meta;
        meta.id = cell(stations_table, r, sid, "station_id");
        if (metadata.count(meta.id))
            throw std::domain_error(stations_path + ":" + std::to_string(stations_table.lines[r]) +
                                    ": duplicate station '" + meta.id + "'");
        meta.easting = parse_number(stations_table, r, seast, "easting", false);
        meta.northing = parse_number(stations_table, r, snorth, "northing", false);
        meta.altitude = parse_number(stations_table, r, salt, "altitude", false);
        meta.distance_to_sea = parse_number(stations_table, r, ssea, "distance_to_sea", false);
        metadata.emplace(meta.id, meta);
    }

    const CsvTable obs = read_csv(observations_path);
    const std::size_t oid = column_index(obs, "station_id");
    const std::size_t odate = column_index(obs, "date");
    const std::size_t otmin = column_index(obs, "tmin");
    const std::size_t otmax = column_index(obs, "tmax");
    const std::size_t otmean = column_index(obs, "tmean");

    std::map<std::string, StationSeries> series;
    std::map<std::string, std::set<std::tuple<int, int, int>>> seen_dates;
    result.rows_read = obs.rows.size();
    for (std::size_t r = 0; r < obs.rows.size(); ++r) {
        const std::string& id = cell(obs, r, oid, "station_id");
        const auto meta = metadata.find(id);
        if (meta == metadata.end())
            throw std::domain_error(observations_path + ":" + std::to_string(obs.lines[r]) +
                                    ": station '" + id + "' not present in " + stations_path);
        DailyRecord record;
        parse_date(obs, r, odate, record.year, record.month, record.day);
        record.tmin = parse_number(obs, r, otmin, "tmin", true);
        record.tmax = parse_number(obs, r, otmax, "tmax", true);
        record.tmean = parse_number(obs, r, otmean, "tmean", true);
        if (!std::isfinite(record.tmin) || !std::isfinite(record.tmax)) {
            ++result.rows_dropped_nonfinite;
            continue;
        }
        if (!seen_dates[id].insert({record.year, record.month, record.day}).second)
            throw std::domain_error(observations_path + ":" + std::to_string(obs.lines[r]) +
                                    ": duplicate date for station '" + id + "'");
        record.dtr = record.tmax - record.tmin;
        auto inserted = series.find(id);
        if (inserted == series.end())
            inserted = series.emplace(id, StationSeries{meta->second, {}}).first;
        inserted->second.records.push_back(record);
    }
    if (obs.rows.empty())
        result.warnings.push_back(observations_path + ": no observation rows");

    for (auto& [id, station] : series) {
        std::sort(station.records.begin(), station.records.end(),
                  [](const DailyRecord& a, const DailyRecord& b) {
                      return std::tie(a.year, a.month, a.day) < std::tie(b.year, b.month, b.day);
                  });
        result.stations.push_back(std::move(station));
    }
    return result;
}

std::array<double, 6> seasonal_covariates(const StationSeries& station, Season season) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const DailyRecord& record : station.records) {
        if (season_of_month(record.month) != season || !std::isfinite(record.tmean)) continue;
        sum += record.tmean;
        ++count;
    }
    if (count == 0)
        throw std::domain_error("seasonal_covariates: station '" + station.meta.id +
                                "' has no daily-mean coverage in " + to_string(season));
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (const DailyRecord& record : station.records) {
        if (season_of_month(record.month) != season || !std::isfinite(record.tmean)) continue;
        ss += (record.tmean - mean) * (record.tmean - mean);
    }
    const double variance = count > 1 ? ss / static_cast<double>(count - 1) : 0.0;
    return {station.meta.easting, station.meta.northing, station.meta.distance_to_sea,
            station.meta.altitude, mean, variance};
}

CleanedData clean(const std::vector<StationSeries>& stations, std::size_t min_per_season) {
    CleanedData data;
    data.counts.stations_in = stations.size();
    for (std::size_t s = 0; s < 4; ++s) data.seasons[s].season = kSeasons[s];

    for (const StationSeries& station : stations) {
        StationSeries filtered;
        filtered.meta = station.meta;
        std::array<std::size_t, 4> per_season{};
        for (const DailyRecord& record : station.records) {
            if (record.dtr < 0.0) {
                ++data.counts.negative_records_removed;
                continue;
            }
            filtered.records.push_back(record);
            ++per_season[static_cast<std::size_t>(season_of_month(record.month))];
        }
        const bool keep = std::all_of(per_season.begin(), per_season.end(),
                                      [&](std::size_t n) { return n >= min_per_season; });
        if (!keep) {
            ++data.counts.stations_dropped;
            continue;
        }
        ++data.counts.stations_kept;
        data.stations.push_back(std::move(filtered));
    }

    for (const StationSeries& station : data.stations) {
        for (std::size_t s = 0; s < 4; ++s) {
            SeasonalDataset& dataset = data.seasons[s];
            std::vector<double> dtr;
            for (const DailyRecord& record : station.records)
                if (season_of_month(record.month) == kSeasons[s]) dtr.push_back(record.dtr);
            dataset.station_ids.push_back(station.meta.id);
            dataset.dtr.push_back(std::move(dtr));
            dataset.covariates.push_back(seasonal_covariates(station, kSeasons[s]));
        }
    }
    return data;
}

EvalReport run_marginal(const CleanedData& data, const std::vector<ModelSpec>& models,
                        const FitConfig& config, int threads, bool collect_plot_data,
                        bool collect_observation_scores) {
    EvalReport report;
    std::vector<std::pair<std::size_t, std::size_t>> tasks;  // (season, station)
    for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t i = 0; i < data.seasons[s].station_ids.size(); ++i)
            tasks.emplace_back(s, i);

    report.rows.resize(tasks.size() * models.size());
    parallel_for(tasks.size(), threads, [&](std::size_t t) {
        const auto [s, i] = tasks[t];
        const SeasonalDataset& dataset = data.seasons[s];
        for (std::size_t m = 0; m < models.size(); ++m)
            report.rows[t * models.size() + m] =
                evaluate_model(models[m], dataset.station_ids[i], dataset.season, dataset.dtr[i],
                               config, collect_plot_data, collect_observation_scores);
    });
    sort_rows(report.rows);
    return report;
}

std::vector<PermutationTestResult> permutation_tests(const EvalReport& report,
                                                     PermutationPairing pairing,
                                                     std::size_t n_perm, std::uint64_t seed) {
    // Collect models per season and the rows per (season, model, station).
    std::map<int, std::vector<std::string>> season_models;
    std::map<std::tuple<int, std::string, std::string>, const EvalRow*> by_key;
    for (const EvalRow& row : report.rows) {
        if (!row.fit_ok) continue;
        auto& models = season_models[static_cast<int>(row.season)];
        if (std::find(models.begin(), models.end(), row.model) == models.end())
            models.push_back(row.model);
        by_key[{static_cast<int>(row.season), row.model, row.station_id}] = &row;
    }

    std::vector<PermutationTestResult> results;
    for (auto& [season, models] : season_models) {
        std::sort(models.begin(), models.end());
        for (std::size_t a = 0; a < models.size(); ++a) {
            for (std::size_t b = a + 1; b < models.size(); ++b) {
                std::vector<double> scores_a, scores_b;
                for (const auto& [key, row] : by_key) {
                    if (std::get<0>(key) != season || std::get<1>(key) != models[a]) continue;
                    const auto other =
                        by_key.find({season, models[b], std::get<2>(key)});
                    if (other == by_key.end()) continue;
                    if (pairing == PermutationPairing::station) {
                        scores_a.push_back(row->mean_crps);
                        scores_b.push_back(other->second->mean_crps);
                    } else {
                        if (row->crps_per_obs.empty() || other->second->crps_per_obs.empty())
                            throw std::domain_error(
                                "permutation_tests: observation pairing needs rows with "
                                "per-observation scores");
                        scores_a.insert(scores_a.end(), row->crps_per_obs.begin(),
                                        row->crps_per_obs.end());
                        scores_b.insert(scores_b.end(), other->second->crps_per_obs.begin(),
                                        other->second->crps_per_obs.end());
                    }
                }
                if (scores_a.empty()) continue;
                PermutationTestResult result;
                result.season = static_cast<Season>(season);
                result.model_a = models[a];
                result.model_b = models[b];
                result.pairs = scores_a.size();
                result.p_value = permutation_test_crps(
                    scores_a, scores_b, n_perm,
                    Rng::derive_seed(seed, static_cast<std::uint64_t>(season) * 1000 + a * 50 + b));
                results.push_back(std::move(result));
            }
        }
    }
    return results;
}

EvalReport run_regression(const CleanedData& data, RegressionMode mode, const FitConfig& config,
                          int threads, bool collect_plot_data) {
    EvalReport report;
    const std::string model_name =
        mode == RegressionMode::in_sample ? "regression-in-sample" : "regression-loocv";

    for (std::size_t s = 0; s < 4; ++s) {
        const SeasonalDataset& dataset = data.seasons[s];
        const std::size_t n_stations = dataset.station_ids.size();
        if (n_stations < 3)
            throw std::domain_error("run_regression: need at least three stations");

        // Covariates constant across every station carry no information and
        // break standardization; drop them for this season.
        std::vector<std::size_t> active;
        for (std::size_t j = 0; j < kCovariateNames.size(); ++j) {
            bool varies = false;
            for (std::size_t i = 1; i < n_stations && !varies; ++i)
                varies = dataset.covariates[i][j] != dataset.covariates[0][j];
            if (varies) {
                active.push_back(j);
            } else {
                report.warnings.push_back("covariate '" + std::string(kCovariateNames[j]) +
                                          "' dropped in " + to_string(dataset.season) +
                                          " (zero variance)");
            }
        }
        // The design rows repeat one covariate vector per station, so its
        // rank cannot exceed the number of distinct training stations; trim
        // the covariate list to keep the regression identifiable.
        const std::size_t training_stations =
            n_stations - (mode == RegressionMode::loocv ? 1 : 0);
        const std::size_t max_covariates = training_stations > 0 ? training_stations - 1 : 0;
        while (active.size() > max_covariates) {
            report.warnings.push_back("covariate '" +
                                      std::string(kCovariateNames[active.back()]) +
                                      "' dropped in " + to_string(dataset.season) +
                                      " (more coefficients than training stations)");
            active.pop_back();
        }
        std::vector<std::string> names;
        for (std::size_t j : active) names.emplace_back(kCovariateNames[j]);

        auto assemble = [&](const std::vector<std::size_t>& station_subset) {
            std::size_t rows = 0;
            for (std::size_t i : station_subset) rows += dataset.dtr[i].size();
            Eigen::MatrixXd raw(rows, static_cast<Eigen::Index>(active.size()));
            Eigen::VectorXd y(rows);
            Eigen::Index r = 0;
            for (std::size_t i : station_subset) {
                for (double value : dataset.dtr[i]) {
                    for (std::size_t j = 0; j < active.size(); ++j)
                        raw(r, static_cast<Eigen::Index>(j)) = dataset.covariates[i][active[j]];
                    y[r] = value;
                    ++r;
                }
            }
            return standardize(names, raw, std::move(y));
        };
        auto station_covariates = [&](std::size_t i) {
            Eigen::VectorXd x0(static_cast<Eigen::Index>(active.size()));
            for (std::size_t j = 0; j < active.size(); ++j)
                x0[static_cast<Eigen::Index>(j)] = dataset.covariates[i][active[j]];
            return x0;
        };

        std::vector<EvalRow> season_rows(n_stations);
        std::vector<Eigen::VectorXd> median_betas;

        if (mode == RegressionMode::in_sample) {
            std::vector<std::size_t> all(n_stations);
            for (std::size_t i = 0; i < n_stations; ++i) all[i] = i;
            const Design design = assemble(all);
            const QuantileFitBundle bundle = fit_bundle(design, threads);
            ++report.bundle_fits;
            median_betas.push_back(bundle.fits[49].beta);
            parallel_for(n_stations, threads, [&](std::size_t i) {
                const FitResult fit_result =
                    distributional_fit(bundle, station_covariates(i), config);
                season_rows[i] =
                    evaluate_distributional(dataset.station_ids[i], dataset.season, fit_result,
                                            dataset.dtr[i], collect_plot_data, model_name);
            });
        } else {
            median_betas.resize(n_stations);
            report.bundle_fits += n_stations;
            parallel_for(n_stations, threads, [&](std::size_t held_out) {
                std::vector<std::size_t> training;
                for (std::size_t i = 0; i < n_stations; ++i)
                    if (i != held_out) training.push_back(i);
                const Design design = assemble(training);
                const QuantileFitBundle bundle = fit_bundle(design, /*threads=*/1);
                median_betas[held_out] = bundle.fits[49].beta;
                const FitResult fit_result =
                    distributional_fit(bundle, station_covariates(held_out), config);
                season_rows[held_out] = evaluate_distributional(
                    dataset.station_ids[held_out], dataset.season, fit_result,
                    dataset.dtr[held_out], collect_plot_data, model_name);
            });
        }

        report.rows.insert(report.rows.end(), season_rows.begin(), season_rows.end());

        std::vector<std::string> coefficient_names = {"intercept"};
        coefficient_names.insert(coefficient_names.end(), names.begin(), names.end());
        for (std::size_t j = 0; j < coefficient_names.size(); ++j) {
            std::vector<double> values;
            for (const Eigen::VectorXd& beta : median_betas)
                values.push_back(beta[static_cast<Eigen::Index>(j)]);
            CoefficientSummary summary;
            summary.season = dataset.season;
            summary.covariate = coefficient_names[j];
            summary.min = *std::min_element(values.begin(), values.end());
            summary.q1 = percentile(values, 0.25);
            summary.median = percentile(values, 0.5);
            summary.q3 = percentile(values, 0.75);
            summary.max = *std::max_element(values.begin(), values.end());
            report.median_regression_coefficients.push_back(summary);
        }
    }
    sort_rows(report.rows);
    return report;
}

std::vector<std::string> emit(const EvalReport& report, const EmitOptions& options,
                              const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    const bool want_csv = options.format == "csv" || options.format == "both";
    const bool want_json = options.format == "json" || options.format == "both";
    if (!want_csv && !want_json)
        throw std::domain_error("emit: format must be csv, json or both");

    auto open_file = [&](const std::string& name) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream stream(path, std::ios::binary);
        if (!stream) throw std::runtime_error("emit: cannot write " + path);
        written.push_back(path);
        return stream;
    };

    if (want_csv) {
        {
            auto stream = open_file("eval.csv");
            stream << "station_id,season,model,mean_crps,e_mu,e_sigma,n_obs,fit_ok,"
                      "median,iqr,tail_weight,left_shape,right_shape,note\n";
            for (const EvalRow& row : report.rows) {
                stream << csv_escape(row.station_id) << ',' << to_string(row.season) << ','
                       << row.model << ',' << format_double(row.mean_crps) << ','
                       << format_double(row.e_mu) << ',' << format_double(row.e_sigma) << ','
                       << row.n_obs << ',' << (row.fit_ok ? 1 : 0) << ',';
                if (row.params) {
                    stream << format_double(row.params->median) << ','
                           << format_double(row.params->iqr) << ','
                           << format_double(row.params->tail_weight) << ','
                           << format_double(row.params->left_shape) << ','
                           << format_double(row.params->right_shape);
                } else {
                    stream << ",,,,";
                }
                stream << ',' << csv_escape(row.note) << '\n';
            }
        }

        // Season x model aggregates over stations (Table 2 / Table 3 layout).
        std::map<std::pair<int, std::string>, std::vector<const EvalRow*>> groups;
        for (const EvalRow& row : report.rows)
            if (row.fit_ok)
                groups[{static_cast<int>(row.season), row.model}].push_back(&row);
        {
            auto stream = open_file("crps_summary.csv");
            stream << "season,model,mean_crps,stations\n";
            for (const auto& [key, rows] : groups) {
                std::vector<double> crps;
                for (const EvalRow* row : rows) crps.push_back(row->mean_crps);
                stream << to_string(static_cast<Season>(key.first)) << ',' << key.second << ','
                       << format_double(pairwise_sum(crps) / static_cast<double>(crps.size()))
                       << ',' << rows.size() << '\n';
            }
        }
        {
            auto stream = open_file("pit_summary.csv");
            stream << "season,model,mean_crps,mean_e_mu,mean_e_sigma\n";
            for (const auto& [key, rows] : groups) {
                std::vector<double> crps, e_mu, e_sigma;
                for (const EvalRow* row : rows) {
                    crps.push_back(row->mean_crps);
                    e_mu.push_back(row->e_mu);
                    e_sigma.push_back(row->e_sigma);
                }
                const double n = static_cast<double>(rows.size());
                stream << to_string(static_cast<Season>(key.first)) << ',' << key.second << ','
                       << format_double(pairwise_sum(crps) / n) << ','
                       << format_double(pairwise_sum(e_mu) / n) << ','
                       << format_double(pairwise_sum(e_sigma) / n) << '\n';
            }
        }
        {
            // Median and central 95% of each fitted parameter (Table 4 layout).
            auto stream = open_file("param_summary.csv");
            stream << "season,model,parameter,q025,q500,q975\n";
            for (const auto& [key, rows] : groups) {
                std::array<std::pair<const char*, std::vector<double>>, 5> columns{
                    {{"median", {}}, {"iqr", {}}, {"tail_weight", {}}, {"left_shape", {}},
                     {"right_shape", {}}}};
                for (const EvalRow* row : rows) {
                    if (!row->params) continue;
                    columns[0].second.push_back(row->params->median);
                    columns[1].second.push_back(row->params->iqr);
                    columns[2].second.push_back(row->params->tail_weight);
                    columns[3].second.push_back(row->params->left_shape);
                    columns[4].second.push_back(row->params->right_shape);
                }
                if (columns[0].second.empty()) continue;
                for (const auto& [name, values] : columns) {
                    stream << to_string(static_cast<Season>(key.first)) << ',' << key.second
                           << ',' << name << ',' << format_double(percentile(values, 0.025))
                           << ',' << format_double(percentile(values, 0.5)) << ','
                           << format_double(percentile(values, 0.975)) << '\n';
                }
            }
        }
        if (!report.median_regression_coefficients.empty()) {
            auto stream = open_file("coefficients.csv");
            stream << "season,covariate,min,q1,median,q3,max\n";
            for (const CoefficientSummary& c : report.median_regression_coefficients) {
                stream << to_string(c.season) << ',' << c.covariate << ','
                       << format_double(c.min) << ',' << format_double(c.q1) << ','
                       << format_double(c.median) << ',' << format_double(c.q3) << ','
                       << format_double(c.max) << '\n';
            }
        }
        if (!report.permutation_tests.empty()) {
            auto stream = open_file("permutation_tests.csv");
            stream << "season,model_a,model_b,p_value,pairs\n";
            for (const PermutationTestResult& t : report.permutation_tests) {
                stream << to_string(t.season) << ',' << t.model_a << ',' << t.model_b << ','
                       << format_double(t.p_value) << ',' << t.pairs << '\n';
            }
        }
        if (options.with_plot_data) {
            fs::create_directories(fs::path(out_dir) / "plot");
            for (const EvalRow& row : report.rows) {
                if (row.qq.empty() && row.pit.empty()) continue;
                const std::string stem =
                    to_string(row.season) + "_" + row.station_id + "_" + row.model;
                if (!row.qq.empty()) {
                    auto stream = open_file("plot/" + stem + "_qq.csv");
                    stream << "sample_quantile,model_quantile\n";
                    for (const auto& [sample, model] : row.qq)
                        stream << format_double(sample) << ',' << format_double(model) << '\n';
                }
                if (!row.pit.empty()) {
                    auto stream = open_file("plot/" + stem + "_pit.csv");
                    stream << "pit\n";
                    for (double u : row.pit) stream << format_double(u) << '\n';
                }
            }
        }
    }

    if (want_json) {
        nlohmann::json rows = nlohmann::json::array();
        for (const EvalRow& row : report.rows) {
            nlohmann::json entry{{"station_id", row.station_id},
                                 {"season", to_string(row.season)},
                                 {"model", row.model},
                                 {"mean_crps", number_or_null(row.mean_crps)},
                                 {"e_mu", number_or_null(row.e_mu)},
                                 {"e_sigma", number_or_null(row.e_sigma)},
                                 {"n_obs", row.n_obs},
                                 {"fit_ok", row.fit_ok},
                                 {"note", row.note}};
            if (row.params) entry["params"] = params_to_json(*row.params);
            if (options.with_plot_data && !row.qq.empty()) {
                nlohmann::json qq = nlohmann::json::array();
                for (const auto& [sample, model] : row.qq) qq.push_back({sample, model});
                entry["qq"] = std::move(qq);
                entry["pit"] = row.pit;
            }
            rows.push_back(std::move(entry));
        }
        nlohmann::json coefficients = nlohmann::json::array();
        for (const CoefficientSummary& c : report.median_regression_coefficients)
            coefficients.push_back({{"season", to_string(c.season)},
                                    {"covariate", c.covariate},
                                    {"min", c.min},
                                    {"q1", c.q1},
                                    {"median", c.median},
                                    {"q3", c.q3},
                                    {"max", c.max}});
        const nlohmann::json document{{"rows", std::move(rows)},
                                      {"median_regression_coefficients", std::move(coefficients)},
                                      {"bundle_fits", report.bundle_fits},
                                      {"warnings", report.warnings}};
        auto stream = open_file("report.json");
        stream << document.dump(2) << '\n';
    }

    std::sort(written.begin(), written.end());
    return written;
}

EvalReport read_eval_report(const std::string& json_path) {
    std::ifstream stream(json_path);
    if (!stream) throw std::runtime_error("read_eval_report: cannot open " + json_path);
    const nlohmann::json document = nlohmann::json::parse(stream);
    EvalReport report;
    for (const nlohmann::json& entry : document.at("rows")) {
        EvalRow row;
        row.station_id = entry.at("station_id").get<std::string>();
        row.season = season_from_string(entry.at("season").get<std::string>());
        row.model = entry.at("model").get<std::string>();
        row.mean_crps = number_from(entry.at("mean_crps"));
        row.e_mu = number_from(entry.at("e_mu"));
        row.e_sigma = number_from(entry.at("e_sigma"));
        row.n_obs = entry.at("n_obs").get<std::size_t>();
        row.fit_ok = entry.at("fit_ok").get<bool>();
        row.note = entry.at("note").get<std::string>();
        if (entry.contains("params")) row.params = star_params_from_json(entry.at("params"));
        if (entry.contains("qq")) {
            for (const auto& pair : entry.at("qq"))
                row.qq.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
            row.pit = entry.at("pit").get<std::vector<double>>();
        }
        report.rows.push_back(std::move(row));
    }
    for (const nlohmann::json& entry : document.at("median_regression_coefficients")) {
        CoefficientSummary c;
        c.season = season_from_string(entry.at("season").get<std::string>());
        c.covariate = entry.at("covariate").get<std::string>();
        c.min = entry.at("min").get<double>();
        c.q1 = entry.at("q1").get<double>();
        c.median = entry.at("median").get<double>();
        c.q3 = entry.at("q3").get<double>();
        c.max = entry.at("max").get<double>();
        report.median_regression_coefficients.push_back(c);
    }
    report.bundle_fits = document.at("bundle_fits").get<std::size_t>();
    report.warnings = document.at("warnings").get<std::vector<std::string>>();
    return report;
}

}  // namespace fpld
