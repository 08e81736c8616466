#include <cmath>

#include <stdexcept>

#include "doctest.h"

#include "fpld/distribution.hpp"
#include "fpld/params.hpp"
#include "fpld/rng.hpp"
#include "fpld/simstudy.hpp"

using namespace fpld;

TEST_CASE("to_star: uniform has median 0 and IQR 1") {
    const FpldStar star = to_star({0.0, 2.0, 0.0, 1.0, 1.0});
    CHECK(star.median == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(star.iqr == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(star.left_shape == 1.0);
}

TEST_CASE("star roundtrip on random parameters") {
    Rng rng(41);
    for (int i = 0; i < 100; ++i) {
        const FpldNatural d{rng.normal(0.0, 5.0), rng.uniform(0.5, 8.0), rng.uniform(-0.95, 0.95),
                            rng.uniform(0.05, 2.0), rng.uniform(-0.45, 2.0)};
        const FpldNatural back = from_star(to_star(d));
        CHECK(back.location == doctest::Approx(d.location).epsilon(1e-12));
        CHECK(back.scale == doctest::Approx(d.scale).epsilon(1e-12));
        CHECK(back.tail_weight == d.tail_weight);
        CHECK(back.left_shape == d.left_shape);
        CHECK(back.right_shape == d.right_shape);
    }
}

TEST_CASE("from_star: anchors the median exactly") {
    const FpldStar star{5.0, 3.0, 0.2, 0.4, 0.3};
    CHECK(quantile(from_star(star), 0.5) == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(quantile(from_star(star), 0.75) - quantile(from_star(star), 0.25) ==
          doctest::Approx(3.0).epsilon(1e-10));
    CHECK_THROWS_AS((void)from_star({1.0, 0.0, 0.0, 1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS((void)from_star({1.0, -2.0, 0.0, 1.0, 1.0}), std::domain_error);
}

TEST_CASE("to_unconstrained: fixed points of the maps") {
    FpldStar star{0.0, std::log(2.0), 0.0, 1.0, 1.0};
    const FpldUnconstrained coords = to_unconstrained(star);
    CHECK(coords.coord[1] == doctest::Approx(0.0).epsilon(1e-12));  // e^{log 2} - 1 = 1
    CHECK(coords.coord[2] == doctest::Approx(0.0).epsilon(1e-14));  // symmetric weight

    // Large-argument branch agrees with extended-precision log(e^x - 1).
    star.iqr = 500.0;
    const long double exact = std::log(std::expm1(500.0L));
    CHECK(to_unconstrained(star).coord[1] ==
          doctest::Approx(static_cast<double>(exact)).epsilon(1e-9));
}

TEST_CASE("to_unconstrained: boundary tail weight rejected") {
    CHECK_THROWS_AS((void)to_unconstrained({0.0, 1.0, 1.0, 1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS((void)to_unconstrained({0.0, 1.0, -1.0, 1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS((void)to_unconstrained({0.0, 1.0, 0.0, 0.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS((void)to_unconstrained({0.0, 1.0, 0.0, 1.0, -0.5}), std::domain_error);
}

TEST_CASE("unconstrained roundtrip incl. stress scales") {
    Rng rng(43);
    auto check_roundtrip = [](const FpldStar& star) {
        const FpldStar back = from_unconstrained(to_unconstrained(star));
        CHECK(std::abs(back.median - star.median) <= 1e-10);
        CHECK(std::abs(back.iqr - star.iqr) <= 1e-10);
        CHECK(std::abs(back.tail_weight - star.tail_weight) <= 1e-10);
        CHECK(std::abs(back.left_shape - star.left_shape) <= 1e-10);
        CHECK(std::abs(back.right_shape - star.right_shape) <= 1e-10);
    };
    for (int i = 0; i < 200; ++i)
        check_roundtrip({rng.normal(5.0, 3.0), rng.uniform(0.1, 10.0), rng.uniform(-0.95, 0.95),
                         rng.uniform(0.02, 3.0), rng.uniform(-0.45, 3.0)});
    check_roundtrip({5.0, 1e-4, 0.3, 0.5, 0.1});
    check_roundtrip({5.0, 500.0, -0.3, 0.5, 0.1});
}

TEST_CASE("from_unconstrained: always lands in the admissible region") {
    Rng rng(47);
    for (int i = 0; i < 200; ++i) {
        FpldUnconstrained coords;
        for (double& c : coords.coord) c = rng.normal(0.0, 20.0);
        const FpldStar star = from_unconstrained(coords);
        CHECK(star.iqr > 0.0);
        CHECK(star.tail_weight > -1.0);
        CHECK(star.tail_weight < 1.0);
        CHECK(star.left_shape > 0.0);
        CHECK(star.right_shape > -0.5);
    }
}

TEST_CASE("validate: natural parameter invariants") {
    CHECK_THROWS_AS(validate({0.0, -1.0, 0.0, 1.0, 1.0}), std::domain_error);
    CHECK_THROWS_AS(validate({0.0, 1.0, 1.5, 1.0, 1.0}), std::domain_error);
    CHECK_NOTHROW(validate({0.0, 1.0, 1.0, 1.0, 1.0}));
}
