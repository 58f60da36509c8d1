// SPDX-License-Identifier: Apache-2.0
#pragma once

// Sensitivity of the expected risk and the induced generalization error.
//
// For a prior over datasets, each dataset induces its own Gibbs solution;
// the barycenter is their mixture.  The gap between evaluating each dataset
// on the barycenter versus on its own solution is the generalization error,
// and it decomposes exactly into the factor times the sum of a mutual-
// information-like and a lautum-information-like term.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "relent/countable.hpp"
#include "relent/gibbs.hpp"
#include "relent/measure.hpp"
#include "relent/partition.hpp"
#include "relent/risk.hpp"

namespace relent {

// Prior over datasets, carried as one precomputed risk vector per dataset.
struct DatasetPrior {
    std::vector<EmpiricalRisk> risks;
    std::vector<double> probs;
};

inline void validate(const DatasetPrior& prior, std::size_t atoms) {
    detail::require(!prior.risks.empty(), "prior needs at least one dataset");
    detail::require(prior.risks.size() == prior.probs.size(),
                    "prior needs one probability per dataset");
    double sum = 0.0;
    for (double p : prior.probs) {
        detail::require(detail::is_finite_nonneg(p), "prior probabilities must be >= 0");
        sum += p;
    }
    detail::require(std::fabs(sum - 1.0) <= kDistributionSumTolerance,
                    "prior probabilities must sum to 1");
    for (const auto& r : prior.risks)
        detail::require(r.size() == atoms, "risk vectors must cover every atom");
}

// Mixture of the per-dataset solutions under the prior.
inline AtomDistribution barycenter(const DatasetPrior& prior, const ReferenceMeasure& q,
                                   double lambda) {
    validate(prior, q.size());
    std::vector<double> mixed(q.size(), 0.0);
    for (std::size_t v = 0; v < prior.risks.size(); ++v) {
        if (prior.probs[v] <= 0.0) continue;
        const GibbsPosterior post = gibbs_posterior(q, prior.risks[v], lambda);
        for (std::size_t i = 0; i < mixed.size(); ++i)
            mixed[i] += prior.probs[v] * post.probs[i];
    }
    double sum = 0.0;
    for (double p : mixed) sum += p;
    for (double& p : mixed) p /= sum;
    return AtomDistribution(std::move(mixed));
}

// Expected-risk sensitivity: how much worse an alternative P does on a
// dataset than that dataset's own solution.  Finite backends are feasible at
// every factor, so the value is always defined once P << Q holds.
inline double sensitivity(const ReferenceMeasure& q, double lambda,
                          const EmpiricalRisk& risk, const AtomDistribution& p) {
    detail::require(q.size() == p.size(), "size mismatch");
    if (!is_absolutely_continuous(p, q))
        throw std::domain_error("alternative distribution is not absolutely continuous");
    const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
    const double rp = expected_risk(risk, p);
    if (std::isinf(rp)) return kInf;
    return rp - expected_risk(risk, post.probs);
}

// Lazy-backend overload: P has finite support over family indices.  Factors
// beyond the certified feasibility bracket give +inf; inside the undecided
// band the classification itself throws.
inline double sensitivity(const CountableFamily& fam, double lambda,
                          const std::vector<std::pair<std::uint64_t, double>>& p) {
    detail::require_factor(lambda);
    detail::require(!p.empty(), "alternative distribution needs support");
    double sum = 0.0;
    for (const auto& [k, prob] : p) {
        detail::require(detail::is_finite_nonneg(prob), "probabilities must be >= 0");
        detail::require(fam.term(k).weight > 0.0,
                        "alternative distribution is not absolutely continuous");
        sum += prob;
    }
    detail::require(std::fabs(sum - 1.0) <= kDistributionSumTolerance,
                    "probabilities must sum to 1");
    const FeasibleSet feas = feasible_set(fam);
    if (feas.shape == FeasibleSet::Shape::empty) return kInf;
    if (feas.shape != FeasibleSet::Shape::all_positive_reals &&
        lambda > feas.b + feas.b_tolerance)
        return kInf;
    double rp = 0.0;
    for (const auto& [k, prob] : p) {
        if (prob <= 0.0) continue;
        const double risk = fam.term(k).risk;
        if (std::isinf(risk)) return kInf;
        rp += prob * risk;
    }
    return rp - tilted_mean(fam, lambda);
}

// The sensitivity rewritten through divergences from the solution.
struct SensitivityIdentity {
    double direct = 0.0;        // R_z(P) - R_z(P*)
    double entropy_form = 0.0;  // lambda (D(P*||Q) + D(P||P*) - D(P||Q))
};

inline SensitivityIdentity sensitivity_decomposition(const ReferenceMeasure& q, double lambda,
                                                     const EmpiricalRisk& risk,
                                                     const AtomDistribution& p) {
    SensitivityIdentity out;
    out.direct = sensitivity(q, lambda, risk, p);
    const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
    const double d_star = relative_entropy(post.probs, q);
    const double d_pp = detail::kl_sum_or_infinity(p.probs(), post.probs.probs());
    const double d_pq = detail::kl_sum(p.probs(), q.weights());
    out.entropy_form =
        std::isinf(d_pp) ? kInf : lambda * (d_star + d_pp - d_pq);
    return out;
}

// Concentration envelope |sensitivity| <= sqrt(2 beta^2 D(P || P*)).
inline double sensitivity_bound(const ReferenceMeasure& q, double lambda,
                                const EmpiricalRisk& risk, const AtomDistribution& p) {
    const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
    const double beta = subgaussian_beta(q, risk).value;
    const double d = detail::kl_sum_or_infinity(p.probs(), post.probs.probs());
    if (std::isinf(d)) return kInf;
    return std::sqrt(2.0 * beta * beta * d);
}

struct GeneralizationReport {
    double lambda = 0.0;
    double gen_error = 0.0;     // prior-weighted sensitivity of the barycenter
    double mutual_info = 0.0;   // E_nu D(P*_nu || barycenter)
    double lautum_info = 0.0;   // E_nu D(barycenter || P*_nu)
    double sigma_q = 0.0;       // largest sub-Gaussian parameter over the prior support
    double lautum_bound = 0.0;  // sqrt(2 sigma_q^2 lautum_info)
};

// Generalization error of the factor-lambda solutions under a dataset prior,
// with its exact information decomposition: gen_error = lambda *
// (mutual_info + lautum_info).  The direct route sums per-dataset
// sensitivities of the barycenter; the decomposition route sums divergences.
inline GeneralizationReport generalization_error(const ReferenceMeasure& q, double lambda,
                                                 const DatasetPrior& prior) {
    validate(prior, q.size());
    GeneralizationReport rep;
    rep.lambda = lambda;
    const AtomDistribution bary = barycenter(prior, q, lambda);
    for (std::size_t v = 0; v < prior.risks.size(); ++v) {
        if (prior.probs[v] <= 0.0) continue;
        const GibbsPosterior post = gibbs_posterior(q, prior.risks[v], lambda);
        const double r_bary = expected_risk(prior.risks[v], bary);
        const double r_own = expected_risk(prior.risks[v], post.probs);
        rep.gen_error += prior.probs[v] * (std::isinf(r_bary) ? kInf : r_bary - r_own);
        rep.mutual_info +=
            prior.probs[v] * detail::kl_sum_or_infinity(post.probs.probs(), bary.probs());
        rep.lautum_info +=
            prior.probs[v] * detail::kl_sum_or_infinity(bary.probs(), post.probs.probs());
        rep.sigma_q = std::max(rep.sigma_q, subgaussian_beta(q, prior.risks[v]).value);
    }
    rep.lautum_bound = std::sqrt(2.0 * rep.sigma_q * rep.sigma_q * rep.lautum_info);
    return rep;
}

}  // namespace relent
