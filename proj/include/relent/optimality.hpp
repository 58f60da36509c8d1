// SPDX-License-Identifier: Apache-2.0
#pragma once

// Optimality structure of the regularized solutions.
//
// rho* is the smallest risk over all atoms, delta* the smallest over the
// reference support.  As the factor shrinks, the Gibbs solution concentrates
// on the delta*-level set; the expected risk decreases monotonically and the
// sublevel sets it induces are nested.  The (delta, epsilon) solver turns
// that into a certificate: a factor whose solution places mass > 1 - epsilon
// on models of risk <= delta.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "relent/gibbs.hpp"
#include "relent/measure.hpp"
#include "relent/partition.hpp"
#include "relent/risk.hpp"

namespace relent {

// Atoms with risk at most delta.  delta = +inf selects every atom.
inline std::vector<std::size_t> level_set(const EmpiricalRisk& risk, double delta) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < risk.size(); ++i)
        if (risk[i] <= delta) s.push_back(i);
    return s;
}

// Ties at the minimum are grouped within this absolute tolerance.
inline constexpr double kMinimizerTieTolerance = 1e-12;

struct OptimalityReport {
    double rho_star = kInf;               // min risk over all atoms
    double delta_star = kInf;             // min risk over the reference support
    std::vector<std::size_t> lstar_atoms;    // supported atoms at delta*
    std::vector<std::size_t> erm_solutions;  // unregularized minimizers over all atoms
    bool coherent = false;                // delta* == rho*
    bool consistent = false;              // reference mass on the delta* level set
    bool quadrature_caveat = false;       // grid resolution limits coherence claims
};

inline OptimalityReport optimality_report(const ReferenceMeasure& q,
                                          const EmpiricalRisk& risk) {
    detail::require(q.size() == risk.size(), "size mismatch");
    OptimalityReport r;
    for (std::size_t i = 0; i < risk.size(); ++i) {
        r.rho_star = std::min(r.rho_star, risk[i]);
        if (q[i] > 0.0) r.delta_star = std::min(r.delta_star, risk[i]);
    }
    double lstar_mass = 0.0;
    for (std::size_t i = 0; i < risk.size(); ++i) {
        if (risk[i] <= r.rho_star + kMinimizerTieTolerance) r.erm_solutions.push_back(i);
        if (q[i] > 0.0 && risk[i] <= r.delta_star + kMinimizerTieTolerance) {
            r.lstar_atoms.push_back(i);
            lstar_mass += q[i];
        }
    }
    r.coherent = r.delta_star <= r.rho_star + kMinimizerTieTolerance;
    r.consistent = lstar_mass > 0.0;
    r.quadrature_caveat = q.kind() == MeasureKind::quadrature;
    return r;
}

namespace detail {

// Sublevel thresholds carry a few ulps of slack so that an atom sitting
// exactly at the tilted mean is never dropped by rounding.
inline double sublevel_threshold(double k1) {
    return k1 + 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(k1));
}

}  // namespace detail

// Atoms whose risk does not exceed the expected risk of the factor-lambda
// solution.  These sets shrink as lambda does.
inline std::vector<std::size_t> expected_sublevel_set(const ReferenceMeasure& q,
                                                      const EmpiricalRisk& risk,
                                                      double lambda) {
    const double k1 = cumulants(q, risk, lambda).k1;
    return level_set(risk, detail::sublevel_threshold(k1));
}

struct ConcentrationRow {
    double lambda = 0.0;
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;
    std::size_t n_size = 0;  // size of the expected sublevel set
    double p_n = 0.0;        // posterior mass on that set
    double p_lstar = 0.0;    // posterior mass on the delta* level set
};

// Cumulants and concentration masses along a descending factor grid.  Checks
// the structural guarantees on the way: sublevel sets are nested and the
// mass that the smaller-factor solution puts on its own sublevel set
// dominates the mass the larger-factor solution puts there.
inline std::vector<ConcentrationRow> concentration_profile(const ReferenceMeasure& q,
                                                           const EmpiricalRisk& risk,
                                                           const std::vector<double>& lambdas) {
    detail::require(!lambdas.empty(), "factor grid must be nonempty");
    for (std::size_t j = 1; j < lambdas.size(); ++j)
        detail::require(lambdas[j] < lambdas[j - 1], "factor grid must descend");

    const OptimalityReport opt = optimality_report(q, risk);
    std::vector<ConcentrationRow> rows;
    rows.reserve(lambdas.size());
    std::vector<std::size_t> prev_set;
    std::vector<double> prev_probs;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        const double lambda = lambdas[j];
        const CumulantReport c = cumulants(q, risk, lambda);
        const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
        const auto set = expected_sublevel_set(q, risk, lambda);
        ConcentrationRow row;
        row.lambda = lambda;
        row.k1 = c.k1;
        row.k2 = c.k2;
        row.k3 = c.k3;
        row.n_size = set.size();
        for (std::size_t i : set) row.p_n += post.probs[i];
        for (std::size_t i : opt.lstar_atoms) row.p_lstar += post.probs[i];

        if (j > 0) {
            // Nesting: the new set must sit inside the previous one.
            std::size_t a = 0;
            for (std::size_t i : set) {
                while (a < prev_set.size() && prev_set[a] < i) ++a;
                if (a == prev_set.size() || prev_set[a] != i)
                    throw std::logic_error("expected sublevel sets failed to nest");
            }
            // Mass ordering on the smaller set: the smaller factor has to
            // dominate the larger one there.
            double prev_mass_on_new = 0.0;
            for (std::size_t i : set) prev_mass_on_new += prev_probs[i];
            if (prev_mass_on_new > row.p_n + 1e-12)
                throw std::logic_error("concentration mass ordering violated");
        }
        prev_set = set;
        prev_probs = post.probs.probs();
        rows.push_back(row);
    }
    return rows;
}

struct DeltaEpsilonCertificate {
    double lambda = 0.0;
    double probability = 0.0;  // certified mass on the delta level set
};

// Finds a factor whose solution is (delta, epsilon)-acceptable: expected
// risk at most delta and mass above 1 - epsilon on models of risk <= delta.
// Budgets below or at the supported minimum are refused: no factor can
// certify them.
inline DeltaEpsilonCertificate delta_epsilon_factor(const ReferenceMeasure& q,
                                                    const EmpiricalRisk& risk, double delta,
                                                    double epsilon) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
    detail::require(!std::isnan(delta), "delta must be a number");
    const OptimalityReport opt = optimality_report(q, risk);
    if (delta <= opt.delta_star + kMinimizerTieTolerance)
        throw infeasible_error("risk budget at or below the supported minimum",
                               opt.delta_star);

    double lambda = 1.0;
    int steps = 0;
    while (cumulants(q, risk, lambda).k1 > delta) {
        lambda /= 2.0;
        if (++steps > 200)
            throw convergence_error("no factor met the expected-risk budget in 200 halvings");
    }
    const auto set = level_set(risk, delta);
    for (int it = 0; it <= 200; ++it) {
        const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
        double mass = 0.0;
        for (std::size_t i : set) mass += post.probs[i];
        if (mass > 1.0 - epsilon) return DeltaEpsilonCertificate{lambda, mass};
        lambda /= 2.0;
    }
    throw convergence_error("probability threshold unmet after 200 shrink steps");
}

}  // namespace relent
