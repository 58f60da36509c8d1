// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "relent/risk.hpp"

using Catch::Matchers::WithinAbs;
using namespace relent;

TEST_CASE("risk values live in [0, +inf]") {
    REQUIRE_THROWS_AS(EmpiricalRisk({-0.1}), std::invalid_argument);
    REQUIRE_THROWS_AS(EmpiricalRisk({std::nan("")}), std::invalid_argument);
    REQUIRE_THROWS_AS(EmpiricalRisk({}), std::invalid_argument);
    REQUIRE_THROWS_AS(EmpiricalRisk({0.1}, -1.0), std::invalid_argument);
    REQUIRE_NOTHROW(EmpiricalRisk({0.0, kInf}));
}

TEST_CASE("datasets validate shape") {
    Dataset ragged;
    ragged.patterns = {{1.0}, {1.0, 2.0}};
    ragged.labels = {0.0, 1.0};
    REQUIRE_THROWS_AS(validate(ragged), std::invalid_argument);
    Dataset mismatched;
    mismatched.patterns = {{1.0}};
    mismatched.labels = {0.0, 1.0};
    REQUIRE_THROWS_AS(validate(mismatched), std::invalid_argument);
}

TEST_CASE("empirical risk of linear predictors") {
    const ModelSpace space = make_model_space({{0.5}, {1.0}});
    Dataset data;
    data.patterns = {{1.0}, {2.0}};
    data.labels = {1.0, 0.5};

    const EmpiricalRisk sq = empirical_risk(space, data, squared_loss_linear());
    REQUIRE_THAT(sq[0], WithinAbs(0.25, 1e-15));   // preds 0.5, 1.0
    REQUIRE_THAT(sq[1], WithinAbs(1.125, 1e-15));  // preds 1.0, 2.0
    REQUIRE(sq.tie_tolerance() == kDatasetTieTolerance);

    const EmpiricalRisk ab = empirical_risk(space, data, absolute_loss_linear());
    REQUIRE_THAT(ab[0], WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(ab[1], WithinAbs(0.75, 1e-15));
}

TEST_CASE("zero-one loss counts sign mistakes") {
    const ModelSpace space = make_model_space({{1.0}, {-1.0}});
    Dataset data;
    data.patterns = {{1.0}, {-1.0}, {2.0}};
    data.labels = {1.0, -1.0, -1.0};
    const EmpiricalRisk r = empirical_risk(space, data, zero_one_loss_threshold());
    REQUIRE_THAT(r[0], WithinAbs(1.0 / 3.0, 1e-15));
    REQUIRE_THAT(r[1], WithinAbs(2.0 / 3.0, 1e-15));
}

TEST_CASE("expected risk follows the 0 * inf convention") {
    const EmpiricalRisk risk({0.5, kInf});
    REQUIRE(expected_risk(risk, AtomDistribution({1.0, 0.0})) == 0.5);
    REQUIRE(std::isinf(expected_risk(risk, AtomDistribution({0.9, 0.1}))));
    // Raw-mass expectation against a reference is unnormalized.
    REQUIRE_THAT(expected_risk(EmpiricalRisk({0.5, 1.0}), custom_measure({2.0, 2.0})),
                 WithinAbs(3.0, 1e-15));
    REQUIRE(std::isinf(expected_risk(risk, custom_measure({1.0, 1.0}))));
    REQUIRE(expected_risk(risk, custom_measure({1.0, 0.0})) == 0.5);
}

TEST_CASE("separability needs two distinct supported finite risks") {
    const EmpiricalRisk spread({0.0, 1.0});
    REQUIRE(is_separable(spread, probability_measure({0.5, 0.5})));
    // Zero weight hides the distinct value.
    REQUIRE_FALSE(is_separable(spread, custom_measure({1.0, 0.0})));
    // Infinite risks never separate: the solution ignores them.
    REQUIRE_FALSE(is_separable(EmpiricalRisk({0.3, kInf}), probability_measure({0.5, 0.5})));
    // Ties within the tolerance collapse.
    const EmpiricalRisk close({0.5, 0.5 + 1e-13}, kDatasetTieTolerance);
    REQUIRE_FALSE(is_separable(close, probability_measure({0.5, 0.5})));
    const EmpiricalRisk apart({0.5, 0.5 + 1e-11}, kDatasetTieTolerance);
    REQUIRE(is_separable(apart, probability_measure({0.5, 0.5})));
}
