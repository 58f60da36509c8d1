// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <stdexcept>

#include "relent/gibbs.hpp"

using Catch::Matchers::WithinAbs;
using namespace relent;

namespace {
const ReferenceMeasure kHalf = probability_measure({0.5, 0.5});
const EmpiricalRisk kBinary({0.0, 1.0});
}  // namespace

TEST_CASE("gibbs solution matches the closed form") {
    const GibbsPosterior post = gibbs_posterior(kHalf, kBinary, 1.0);
    REQUIRE(post.lambda == 1.0);
    REQUIRE_THAT(post.k0, WithinAbs(-0.3798854930417225, 1e-12));
    REQUIRE_THAT(post.probs[0], WithinAbs(0.7310585786300049, 1e-12));
    REQUIRE_THAT(post.probs[1], WithinAbs(0.2689414213699951, 1e-12));
    REQUIRE(post.reference_fingerprint == reference_fingerprint(kHalf, kBinary));
}

TEST_CASE("rejected models carry exact zeros") {
    const EmpiricalRisk risk({0.0, kInf});
    const GibbsPosterior post = gibbs_posterior(kHalf, risk, 0.7);
    REQUIRE(post.probs[0] == 1.0);
    REQUIRE(post.probs[1] == 0.0);
    REQUIRE(post.k0 == std::log(0.5));
    REQUIRE_THROWS_AS(gibbs_posterior(kHalf, EmpiricalRisk({kInf, kInf}), 1.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(gibbs_posterior(kHalf, kBinary, 0.0), std::invalid_argument);
}

TEST_CASE("density against the reference") {
    const GibbsPosterior post = gibbs_posterior(kHalf, kBinary, 1.0);
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE_THAT(rn_derivative(post, kHalf, i),
                     WithinAbs(std::exp(-post.k0 - kBinary[i] / 1.0), 1e-12));
    // The same formula holds for raw (non-probability) reference weights.
    const ReferenceMeasure heavy = custom_measure({1.5, 0.5});
    const GibbsPosterior hp = gibbs_posterior(heavy, kBinary, 2.0);
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE_THAT(rn_derivative(hp, heavy, i),
                     WithinAbs(std::exp(-hp.k0 - kBinary[i] / 2.0), 1e-12));
    // Outside the reference support the derivative is undefined.
    const ReferenceMeasure masked = custom_measure({0.5, 0.0, 0.5});
    const GibbsPosterior mp = gibbs_posterior(masked, EmpiricalRisk({0.0, 1.0, 1.0}), 1.0);
    REQUIRE(mp.probs[1] == 0.0);
    REQUIRE_THROWS_AS(rn_derivative(mp, masked, 1), std::domain_error);
    REQUIRE_THROWS_AS(rn_derivative(mp, masked, 3), std::invalid_argument);
}

TEST_CASE("optimal objective value: three evaluations agree") {
    // Constant risk over a counting reference has a closed optimum.
    const ObjectiveIdentity id =
        objective_identity(counting_measure(4), EmpiricalRisk({0.7, 0.7, 0.7, 0.7}), 0.8);
    const double want = -0.4090354888959125;  // 0.7 - 0.8 log 4, frozen
    REQUIRE_THAT(id.primal, WithinAbs(want, 1e-12));
    REQUIRE_THAT(id.dual, WithinAbs(want, 1e-12));
    REQUIRE_THAT(id.reference, WithinAbs(want, 1e-12));
    // A supported infinite risk leaves the dual undefined.
    const ObjectiveIdentity rej = objective_identity(kHalf, EmpiricalRisk({0.0, kInf}), 1.0);
    REQUIRE(std::isnan(rej.dual));
    REQUIRE_THAT(rej.primal, WithinAbs(rej.reference, 1e-12));
}

TEST_CASE("risk drop equals the scaled symmetrized divergence") {
    const JeffreyGap gap = jeffrey_gap(kHalf, kBinary, 1.0);
    REQUIRE_THAT(gap.risk_drop, WithinAbs(0.2310585786300049, 1e-12));
    REQUIRE_THAT(gap.symmetrized, WithinAbs(gap.risk_drop, 1e-12));
    // Nonseparable risk sheds nothing.
    const JeffreyGap flat = jeffrey_gap(kHalf, EmpiricalRisk({0.3, 0.3}), 1.0);
    REQUIRE_THAT(flat.risk_drop, WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(flat.symmetrized, WithinAbs(0.0, 1e-15));
    // The identity is a probability-reference statement.
    REQUIRE_THROWS_AS(jeffrey_gap(custom_measure({1.0, 1.0}), kBinary, 1.0),
                      std::domain_error);
}

TEST_CASE("two regularization stages collapse into one") {
    const GibbsPosterior two = compose(kHalf, kBinary, 1.0, 1.0);
    const GibbsPosterior one = gibbs_posterior(kHalf, kBinary, 0.5);
    REQUIRE_THAT(two.probs[0], WithinAbs(0.8807970779778824, 1e-12));
    REQUIRE_THAT(two.probs[1], WithinAbs(0.11920292202211756, 1e-12));
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE_THAT(two.probs[i], WithinAbs(one.probs[i], 1e-12));
}

TEST_CASE("swapped-argument regularization: normalizing root") {
    const ReverseEntropySolution sol = reverse_entropy_posterior(kHalf, kBinary, 1.0);
    REQUIRE_THAT(sol.beta, WithinAbs(0.7071067811865476, 1e-12));  // 1/sqrt(2)
    REQUIRE_THAT(sol.probs[0], WithinAbs(0.7071067811865476, 1e-10));
    REQUIRE_THAT(sol.probs[1], WithinAbs(0.2928932188134524, 1e-10));
    REQUIRE(sol.residual <= 1e-12);
}

TEST_CASE("swapped-argument regularization: constant risk closed form") {
    // beta = lambda * Q(M) - c.
    const ReverseEntropySolution sol =
        reverse_entropy_posterior(counting_measure(2), EmpiricalRisk({0.5, 0.5}), 1.0);
    REQUIRE_THAT(sol.beta, WithinAbs(1.5, 1e-12));
    REQUIRE_THAT(sol.probs[0], WithinAbs(0.5, 1e-15));
    REQUIRE_THAT(sol.probs[1], WithinAbs(0.5, 1e-15));
}

TEST_CASE("swapped-argument regularization: infeasible when mass cannot reach one") {
    bool thrown = false;
    try {
        reverse_entropy_posterior(kHalf, EmpiricalRisk({2.0, 4.0}), 1.0);
    } catch (const infeasible_error& e) {
        thrown = true;
        REQUIRE_THAT(e.supremum(), WithinAbs(0.375, 1e-15));
    }
    REQUIRE(thrown);
}

TEST_CASE("divergence-budget solution") {
    // Zero budget returns the anchor itself.
    const ConstrainedSolution same = divergence_constrained_posterior(kHalf, kBinary, 1.0, 0.0);
    REQUIRE(same.omega == 1.0);
    const GibbsPosterior anchor = gibbs_posterior(kHalf, kBinary, 1.0);
    REQUIRE(same.posterior.probs[0] == anchor.probs[0]);
    // A positive budget is met to the solver tolerance.
    const ConstrainedSolution hit = divergence_constrained_posterior(kHalf, kBinary, 1.0, 0.1);
    REQUIRE(hit.omega < 1.0);
    REQUIRE(hit.omega > 0.0);
    REQUIRE_THAT(relative_entropy(hit.posterior.probs, anchor.probs), WithinAbs(0.1, 2e-8));
    // Budgets at or above the concentration supremum are unreachable.
    bool thrown = false;
    try {
        divergence_constrained_posterior(kHalf, kBinary, 1.0, 0.35);
    } catch (const infeasible_error& e) {
        thrown = true;
        REQUIRE_THAT(e.supremum(), WithinAbs(0.3132616875182228, 1e-12));
    }
    REQUIRE(thrown);
    // Nonseparable risks admit only the zero budget.
    REQUIRE_THROWS_AS(
        divergence_constrained_posterior(kHalf, EmpiricalRisk({0.4, 0.4}), 1.0, 0.01),
        infeasible_error);
    REQUIRE_THROWS_AS(divergence_constrained_posterior(kHalf, kBinary, 1.0, -0.1),
                      std::invalid_argument);
}

TEST_CASE("posterior sampling is deterministic and weighted") {
    const GibbsPosterior post = gibbs_posterior(kHalf, kBinary, 1.0);
    const auto a = sample(post, 42, 10000);
    const auto b = sample(post, 42, 10000);
    REQUIRE(a == b);
    const auto c = sample(post, 43, 10000);
    REQUIRE(a != c);
    double freq0 = 0.0;
    for (std::size_t idx : a) freq0 += idx == 0 ? 1.0 : 0.0;
    freq0 /= static_cast<double>(a.size());
    REQUIRE_THAT(freq0, WithinAbs(0.7310585786300049, 0.02));  // ~4.5 sigma
    // Rejected atoms are never drawn.
    const GibbsPosterior masked =
        gibbs_posterior(probability_measure({0.4, 0.2, 0.4}), EmpiricalRisk({0.0, kInf, 1.0}), 1.0);
    for (std::size_t idx : sample(masked, 7, 5000)) REQUIRE(idx != 1);
}

TEST_CASE("fingerprints separate distinct inputs") {
    const auto base = reference_fingerprint(kHalf, kBinary);
    REQUIRE(base == reference_fingerprint(probability_measure({0.5, 0.5}), EmpiricalRisk({0.0, 1.0})));
    REQUIRE(base != reference_fingerprint(kHalf, EmpiricalRisk({0.0, 1.5})));
    REQUIRE(base != reference_fingerprint(probability_measure({0.4, 0.6}), kBinary));
}
