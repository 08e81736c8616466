#include <algorithm>
#include <cmath>
#include <limits>

#include <stdexcept>

#include "doctest.h"

#include "fpld/distribution.hpp"
#include "fpld/rng.hpp"
#include "fpld/scoring.hpp"
#include "fpld/simstudy.hpp"

using namespace fpld;

namespace {
const FpldNatural kUniform{0.0, 2.0, 0.0, 1.0, 1.0};
}

TEST_CASE("crps_fpld: uniform forecast closed form") {
    CHECK(crps_fpld(kUniform, 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-8));
    CHECK(crps_fpld(kUniform, 0.0) < crps_fpld(kUniform, 0.9));
    CHECK_THROWS_AS((void)crps_fpld(kUniform, std::numeric_limits<double>::infinity()),
                    std::domain_error);
    CHECK_THROWS_AS((void)crps_fpld({0.0, 2.0, 0.0, 1.0, -1.5}, 0.0), std::domain_error);
}

TEST_CASE("crps_fpld: quadrature oracle incl. zero-shape limits") {
    Rng rng(51);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        FpldStar star = sample_lambda_star(rng);
        if (i % 5 == 0) star.left_shape = rng.uniform(-1e-8, 1e-8);
        if (i % 5 == 1) star.right_shape = rng.uniform(-1e-8, 1e-8);
        if (i % 5 == 2) star.left_shape = 0.0;
        const FpldNatural d = from_star(star);
        const double y = quantile(d, rng.uniform_open01());
        const double closed = crps_fpld(d, y);
        const double oracle =
            crps_quadrature([&](double t) { return cdf(d, t); }, support(d), y);
        CHECK(closed >= 0.0);
        worst = std::max(worst, std::abs(closed - oracle));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("crps_fpld: observation outside the support") {
    const double inside = crps_fpld(kUniform, 0.9);
    const double outside = crps_fpld(kUniform, 3.0);
    // Threshold integral grows by the distance to the support.
    CHECK(outside > inside + 1.9);
    const double oracle =
        crps_quadrature([&](double t) { return cdf(kUniform, t); }, support(kUniform), 3.0);
    CHECK(outside == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("crps_quadrature: textbook uniform(0,1) and threshold monotonicity") {
    const auto uniform01 = [](double t) { return std::clamp(t, 0.0, 1.0); };
    const SupportInterval sup{0.0, 1.0};
    CHECK(crps_quadrature(uniform01, sup, 0.5) == doctest::Approx(1.0 / 12.0).epsilon(1e-8));

    double previous = crps_quadrature(uniform01, sup, -0.5);
    for (double y : {-1.0, -2.0, -4.0}) {
        const double value = crps_quadrature(uniform01, sup, y);
        CHECK(value > previous);
        previous = value;
    }
}

TEST_CASE("mean_crps: single observation and duplication invariance") {
    const std::vector<double> one = {0.3};
    CHECK(mean_crps(kUniform, one) == doctest::Approx(crps_fpld(kUniform, 0.3)).epsilon(1e-14));

    const std::vector<double> y = {-0.5, 0.1, 0.4, 0.8};
    std::vector<double> doubled = y;
    doubled.insert(doubled.end(), y.begin(), y.end());
    CHECK(mean_crps(kUniform, doubled) == doctest::Approx(mean_crps(kUniform, y)).epsilon(1e-14));

    CHECK_THROWS_AS((void)mean_crps(kUniform, std::vector<double>{}), std::domain_error);
    const std::vector<FpldNatural> two(2, kUniform);
    CHECK_THROWS_AS((void)mean_crps(std::span<const FpldNatural>(two), one), std::domain_error);
}

TEST_CASE("skill_score: perfect fit is exactly zero, misfits are positive") {
    Rng rng(53);
    const FpldStar truth = sample_lambda_star(rng);
    const FpldNatural d = from_star(truth);
    const auto y = sample(d, 2048, 9);
    CHECK(skill_score(d, d, y) == 0.0);

    FpldNatural shifted = d;
    shifted.location += 5.0;
    CHECK(skill_score(shifted, d, y) > 0.0);

    // expected mode runs the Monte-Carlo numerator
    CHECK(std::isfinite(skill_score(shifted, d, y, SkillMode::expected, 500, 1)));
    CHECK_THROWS_AS((void)skill_score(shifted, d, y, SkillMode::expected, 0, 1),
                    std::domain_error);
}

TEST_CASE("pit_errors: symmetric pair, uniform grid, true-model calibration") {
    const std::vector<double> pair = {0.25, 0.75};
    CHECK(pit_errors(pair).e_mu == doctest::Approx(0.0).epsilon(1e-15));

    std::vector<double> grid(1000);
    for (int i = 0; i < 1000; ++i) grid[static_cast<std::size_t>(i)] = (i + 0.5) / 1000.0;
    const PitErrors uniform_errors = pit_errors(grid);
    CHECK(std::abs(uniform_errors.e_mu) < 1e-12);
    CHECK(std::abs(uniform_errors.e_sigma) < 1e-3);

    Rng rng(59);
    for (int rep = 0; rep < 5; ++rep) {
        const FpldNatural d = from_star(sample_lambda_star(rng));
        const std::size_t n = 4096;
        const auto y = sample(d, n, rng.next_u64());
        std::vector<double> pit(n);
        for (std::size_t i = 0; i < n; ++i) pit[i] = cdf(d, y[i]);
        const PitErrors errors = pit_errors(pit);
        CHECK(std::abs(errors.e_mu) <= 3.0 / std::sqrt(12.0 * n));
        CHECK(std::abs(errors.e_sigma) <= 0.02);
    }

    CHECK_THROWS_AS((void)pit_errors(std::vector<double>{0.5}), std::domain_error);
}

TEST_CASE("permutation_test_crps: identical, shifted and invalid inputs") {
    std::vector<double> a(100), b(100);
    Rng rng(61);
    for (std::size_t i = 0; i < 100; ++i) a[i] = b[i] = rng.uniform(0.0, 2.0);
    CHECK(permutation_test_crps(a, b, 500, 1) == doctest::Approx(1.0));

    for (double& v : a) v += 1.0;
    CHECK(permutation_test_crps(a, b, 500, 1) <= 0.01);

    CHECK_THROWS_AS((void)permutation_test_crps(a, b, 0, 1), std::domain_error);
    b.pop_back();
    CHECK_THROWS_AS((void)permutation_test_crps(a, b, 10, 1), std::domain_error);
}

TEST_CASE("qq_points: length, identity line, Monte-Carlo closeness") {
    Rng rng(67);
    const FpldStar truth = sample_lambda_star(rng);
    const FpldNatural d = from_star(truth);

    std::vector<double> exact(99);
    for (int i = 0; i < 99; ++i)
        exact[static_cast<std::size_t>(i)] = quantile(d, (i + 0.5) / 99.0);
    const auto identity = qq_points(d, exact);
    CHECK(identity.size() == 99);
    for (const auto& [sample_q, model_q] : identity)
        CHECK(sample_q == doctest::Approx(model_q).epsilon(1e-12));

    const auto y = sample(d, 100000, 3);
    const auto points = qq_points(d, y);
    CHECK(points.size() == y.size());
    double central_worst = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(points.size());
        if (p < 0.05 || p > 0.95) continue;
        central_worst = std::max(central_worst, std::abs(points[i].first - points[i].second));
    }
    CHECK(central_worst <= 0.05 * truth.iqr);
}

TEST_CASE("crps propriety: truth beats perturbations on large samples") {
    Rng rng(71);
    const FpldStar truth = sample_lambda_star(rng);
    const FpldNatural d = from_star(truth);
    const auto y = sample(d, 10000, 5);
    const double truth_score = mean_crps(d, y);
    for (int k = 0; k < 20; ++k) {
        FpldStar perturbed = truth;
        perturbed.median += rng.uniform(0.2, 1.0) * (k % 2 == 0 ? 1.0 : -1.0);
        perturbed.iqr *= rng.uniform(1.15, 1.6);
        CHECK(truth_score <= mean_crps(from_star(perturbed), y));
    }
}

TEST_CASE("crps equivariance: translation and scale") {
    Rng rng(73);
    for (int rep = 0; rep < 20; ++rep) {
        const FpldNatural d = from_star(sample_lambda_star(rng));
        const double y = quantile(d, rng.uniform_open01());
        const double base = crps_fpld(d, y);

        const double shift = rng.uniform(-50.0, 50.0);
        FpldNatural translated = d;
        translated.location += shift;
        CHECK(crps_fpld(translated, y + shift) == doctest::Approx(base).epsilon(1e-9));

        const double scale = rng.uniform(0.1, 20.0);
        FpldNatural scaled = d;
        scaled.location *= scale;
        scaled.scale *= scale;
        CHECK(crps_fpld(scaled, y * scale) == doctest::Approx(scale * base).epsilon(1e-9));
    }
}
