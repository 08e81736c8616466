// Shared test fixtures: Algorithm-style truth draws, synthetic station data
// and CSV fixture writing.
#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fpld/distribution.hpp"
#include "fpld/pipeline.hpp"
#include "fpld/rng.hpp"
#include "fpld/simstudy.hpp"

namespace fpld::testing {

inline FpldStar draw_truth(Rng& rng) { return sample_lambda_star(rng); }

struct SyntheticOptions {
    std::size_t n_stations = 8;
    int years = 3;
    std::uint64_t seed = 1;
    // Per-station shift of the distribution median driven by the first
    // covariate; zero means every station shares the same distribution.
    double covariate_effect = 0.0;
};

inline constexpr std::array<int, 12> kMonthDays = {31, 28, 31, 30, 31, 30,
                                                   31, 31, 30, 31, 30, 31};

// Daily series drawn from a single FPLD with plausible metadata; tmax/tmin
// are reconstructed around a seasonal mean so that tmax - tmin reproduces
// the drawn range exactly.
inline std::vector<StationSeries> make_synthetic_stations(const FpldStar& truth,
                                                          const SyntheticOptions& options) {
    Rng rng(options.seed);
    std::vector<StationSeries> stations;
    for (std::size_t s = 0; s < options.n_stations; ++s) {
        StationSeries station;
        char id[16];
        std::snprintf(id, sizeof id, "S%02zu", s + 1);
        station.meta.id = id;
        station.meta.easting = rng.uniform(0.0, 500000.0);
        station.meta.northing = rng.uniform(6.4e6, 7.0e6);
        station.meta.altitude = rng.uniform(0.0, 1500.0);
        station.meta.distance_to_sea = rng.uniform(0.0, 120000.0);

        FpldStar local = truth;
        local.median += options.covariate_effect * (station.meta.altitude - 750.0) / 750.0;
        const FpldNatural natural = from_star(local);
        const double climate_offset = rng.uniform(-3.0, 3.0);

        int year = 1990, month = 1, day = 1;
        const int total_days = options.years * 365;
        for (int t = 0; t < total_days; ++t) {
            DailyRecord record;
            record.year = year;
            record.month = month;
            record.day = day;
            const double season_wave =
                8.0 * std::cos(2.0 * 3.14159265358979323846 * (month - 7) / 12.0);
            record.tmean = climate_offset + season_wave + rng.normal(0.0, 2.0);
            record.dtr = quantile(natural, rng.uniform_open01());
            record.tmax = record.tmean + 0.5 * record.dtr;
            record.tmin = record.tmax - record.dtr;
            station.records.push_back(record);

            if (++day > kMonthDays[static_cast<std::size_t>(month - 1)]) {
                day = 1;
                if (++month > 12) {
                    month = 1;
                    ++year;
                }
            }
        }
        stations.push_back(std::move(station));
    }
    return stations;
}

inline void write_fixture_csvs(const std::vector<StationSeries>& stations,
                               const std::string& observations_path,
                               const std::string& stations_path) {
    std::ofstream obs(observations_path, std::ios::binary);
    obs << "station_id,date,tmin,tmax,tmean\n";
    char date[16];
    for (const StationSeries& station : stations) {
        for (const DailyRecord& record : station.records) {
            std::snprintf(date, sizeof date, "%04d-%02d-%02d", record.year, record.month,
                          record.day);
            obs << station.meta.id << ',' << date << ',' << record.tmin << ',' << record.tmax
                << ',' << record.tmean << '\n';
        }
    }
    std::ofstream meta(stations_path, std::ios::binary);
    meta << "station_id,easting,northing,altitude,distance_to_sea\n";
    for (const StationSeries& station : stations)
        meta << station.meta.id << ',' << station.meta.easting << ',' << station.meta.northing
             << ',' << station.meta.altitude << ',' << station.meta.distance_to_sea << '\n';
}

inline std::string read_file(const std::string& path) {
    std::ifstream stream(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(stream), std::istreambuf_iterator<char>());
}

}  // namespace fpld::testing
