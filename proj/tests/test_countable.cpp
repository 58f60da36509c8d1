// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "relent/countable.hpp"

using Catch::Matchers::WithinAbs;
using namespace relent;

TEST_CASE("logarithmic-risk counting family terms") {
    const CountableFamily fam = log_risk_counting_family();
    REQUIRE(fam.term(0).weight == 1.0);
    REQUIRE(fam.term(0).risk == 0.0);
    REQUIRE_THAT(fam.term(3).risk, WithinAbs(std::log(4.0), 1e-15));
}

TEST_CASE("lazy log partition classifies the tail") {
    const CountableFamily fam = log_risk_counting_family();
    // t = -2: sum (1+k)^{-2} = pi^2/6; log of it, frozen.
    REQUIRE_THAT(log_partition(fam, -2.0), WithinAbs(0.49770030247074537, 1e-6));
    // t = -1: the harmonic boundary, dyadic ratio pinned at 1.
    REQUIRE_THROWS_AS(log_partition(fam, -1.0), indeterminate_error);
    // t = -1/2 and t = +1/2: certified divergence.
    REQUIRE(std::isinf(log_partition(fam, -0.5)));
    REQUIRE(std::isinf(log_partition(fam, 0.5)));
}

TEST_CASE("lazy families validate their terms") {
    CountableFamily bad;
    bad.term = [](std::uint64_t) { return CountableTerm{-1.0, 0.0}; };
    REQUIRE_THROWS_AS(log_partition(bad, -1.0), std::invalid_argument);
    CountableFamily starved = log_risk_counting_family();
    starved.schedule.max_terms = 8;
    REQUIRE_THROWS_AS(log_partition(starved, -2.0), std::invalid_argument);
}

TEST_CASE("feasible set of the counting family brackets the unit boundary") {
    const FeasibleSet f = feasible_set(log_risk_counting_family());
    REQUIRE(f.shape == FeasibleSet::Shape::open_bounded);
    REQUIRE(f.b_tolerance <= 1e-2);
    REQUIRE(std::fabs(f.b - 1.0) <= f.b_tolerance + 1e-12);
    REQUIRE(f.contains(0.5));
    REQUIRE_FALSE(f.contains(2.0));
}

TEST_CASE("geometric weights keep every factor feasible") {
    CountableFamily fam;
    fam.term = [](std::uint64_t k) {
        return CountableTerm{std::pow(0.5, static_cast<double>(k)),
                             std::log1p(static_cast<double>(k))};
    };
    const FeasibleSet f = feasible_set(fam);
    REQUIRE(f.shape == FeasibleSet::Shape::all_positive_reals);
    REQUIRE(f.contains(1e6));
}

TEST_CASE("a divergent family at every factor reports empty") {
    CountableFamily fam;
    fam.term = [](std::uint64_t k) {
        return CountableTerm{1.0 / std::sqrt(1.0 + static_cast<double>(k)), 0.0};
    };
    fam.schedule.max_terms = std::uint64_t{1} << 14;  // divergence shows early
    const FeasibleSet f = feasible_set(fam);
    REQUIRE(f.shape == FeasibleSet::Shape::empty);
    REQUIRE_FALSE(f.contains(0.5));
}

TEST_CASE("tilted mean of the lazy backend") {
    const CountableFamily fam = log_risk_counting_family();
    // Frozen from an extended-precision zeta-derivative evaluation; the
    // tolerance covers the dyadic tail completion of the truncated series.
    REQUIRE_THAT(tilted_mean(fam, 0.5), WithinAbs(0.5699609930945328, 1e-6));
    REQUIRE_THROWS_AS(tilted_mean(fam, 2.0), infeasible_error);
    REQUIRE_THROWS_AS(tilted_mean(fam, 1.0), indeterminate_error);
    REQUIRE_THROWS_AS(tilted_mean(fam, 0.0), std::invalid_argument);
}
