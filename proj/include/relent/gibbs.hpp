// SPDX-License-Identifier: Apache-2.0
#pragma once

// Solutions of entropy-regularized empirical risk minimization.
//
// The unique minimizer of  R_z(P) + lambda * D(P || Q)  over distributions
// P << Q has density  dP/dQ = exp(-K(-1/lambda) - L/lambda), a Gibbs
// tilting of the reference.  Everything here is computed through the shared
// max-shifted tilting kernel, so atoms outside the support and atoms of
// infinite risk carry exact zeros.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <vector>

#include "relent/measure.hpp"
#include "relent/partition.hpp"
#include "relent/risk.hpp"

namespace relent {

namespace detail {

inline void fnv1a_mix(std::uint64_t& h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
}

}  // namespace detail

// Stable identity of a (reference, risk) pair, for cache validation.
inline std::uint64_t reference_fingerprint(const ReferenceMeasure& q,
                                           const EmpiricalRisk& risk) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const int kind = static_cast<int>(q.kind());
    detail::fnv1a_mix(h, &kind, sizeof kind);
    const double vol = q.cell_volume();
    detail::fnv1a_mix(h, &vol, sizeof vol);
    detail::fnv1a_mix(h, q.weights().data(), q.weights().size() * sizeof(double));
    detail::fnv1a_mix(h, risk.values().data(), risk.values().size() * sizeof(double));
    return h;
}

struct GibbsPosterior {
    double lambda = 0.0;
    double k0 = 0.0;  // log-partition K(-1/lambda)
    AtomDistribution probs;
    std::uint64_t reference_fingerprint = 0;
};

// The Gibbs solution at factor lambda.  Throws invalid_argument when no
// supported atom has finite risk (the objective is +inf everywhere).
inline GibbsPosterior gibbs_posterior(const ReferenceMeasure& q, const EmpiricalRisk& risk,
                                      double lambda) {
    detail::require_factor(lambda);
    detail::require(q.size() == risk.size(), "size mismatch");
    if (!detail::has_finite_supported_risk(q, risk))
        throw std::invalid_argument("posterior support empty: no finite risk on the reference support");
    auto tilt = detail::tilted_distribution(q, risk, -1.0 / lambda);
    return GibbsPosterior{lambda, tilt.log_partition, AtomDistribution(std::move(tilt.probs)),
                          reference_fingerprint(q, risk)};
}

// Radon-Nikodym derivative of the posterior against its reference at one
// atom.  Zero reference weight there is caller misuse.
inline double rn_derivative(const GibbsPosterior& post, const ReferenceMeasure& q,
                            std::size_t atom) {
    detail::require(post.probs.size() == q.size(), "size mismatch");
    detail::require(atom < q.size(), "atom out of range");
    if (q[atom] <= 0.0)
        throw std::domain_error("derivative undefined outside the reference support");
    return post.probs[atom] / q[atom];
}

// R_z(P) + lambda * D(P || Q), the quantity the Gibbs solution minimizes.
inline double objective_value(const AtomDistribution& p, const ReferenceMeasure& q,
                              const EmpiricalRisk& risk, double lambda) {
    detail::require_factor(lambda);
    const double d = relative_entropy(p, q);  // throws when P is not << Q
    const double r = expected_risk(risk, p);
    if (std::isinf(r)) return kInf;
    return r + lambda * d;
}

// The optimal objective value admits two closed evaluations besides the
// direct one; all three agree for finite-mass references.
struct ObjectiveIdentity {
    double primal = 0.0;      // R_z(P*) + lambda D(P* || Q)
    double dual = 0.0;        // (R_z(Q) - lambda D(Q || P*)) / Q(M), NaN if undefined
    double reference = 0.0;   // -lambda K(-1/lambda)
};

inline ObjectiveIdentity objective_identity(const ReferenceMeasure& q,
                                            const EmpiricalRisk& risk, double lambda) {
    const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
    ObjectiveIdentity out;
    out.primal = expected_risk(risk, post.probs) + lambda * relative_entropy(post.probs, q);
    out.reference = -lambda * post.k0;
    bool dual_defined = true;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0.0 && std::isinf(risk[i])) dual_defined = false;
    if (dual_defined) {
        double r_raw = 0.0, d_raw = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i] <= 0.0) continue;
            r_raw += q[i] * risk[i];
            d_raw += q[i] * (std::log(q[i]) - std::log(post.probs[i]));
        }
        out.dual = (r_raw - lambda * d_raw) / q.total_mass();
    } else {
        out.dual = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// For a probability reference, how much expected risk the Gibbs solution
// sheds, and the same gap written as a scaled Jeffrey divergence.  Both are
// nonnegative and agree; they are strictly positive exactly for separable
// risks.
struct JeffreyGap {
    double risk_drop = 0.0;    // R_z(Q) - R_z(P*)
    double symmetrized = 0.0;  // lambda * (D(Q || P*) + D(P* || Q))
};

inline JeffreyGap jeffrey_gap(const ReferenceMeasure& q, const EmpiricalRisk& risk,
                              double lambda) {
    if (!q.is_probability())
        throw std::domain_error("risk gap needs a probability reference");
    const GibbsPosterior post = gibbs_posterior(q, risk, lambda);
    std::vector<double> qn = q.weights();
    for (double& w : qn) w /= q.total_mass();
    const AtomDistribution qd(qn);
    JeffreyGap out;
    const double rq = expected_risk(risk, qd);
    const double rp = expected_risk(risk, post.probs);
    out.risk_drop = std::isinf(rq) ? kInf : rq - rp;
    const double d_qp = detail::kl_sum_or_infinity(qd.probs(), post.probs.probs());
    const double d_pq = detail::kl_sum(post.probs.probs(), qd.probs());
    out.symmetrized = std::isinf(d_qp) ? kInf : lambda * (d_qp + d_pq);
    return out;
}

// Solve again with the first solution as reference.  Two regularization
// stages with factors lambda and alpha collapse into one stage at
// 1/(1/lambda + 1/alpha); callers can check that identity against a direct
// solve.
inline GibbsPosterior compose(const ReferenceMeasure& q, const EmpiricalRisk& risk,
                              double lambda, double alpha) {
    detail::require_factor(alpha);
    const GibbsPosterior first = gibbs_posterior(q, risk, lambda);
    const ReferenceMeasure second_ref(MeasureKind::probability, first.probs.probs());
    return gibbs_posterior(second_ref, risk, alpha);
}

// Solution of the swapped-argument regularization  R_z(P) + lambda D(Q || P):
// dP/dQ = lambda / (beta + L) with beta > max(0, -inf L) chosen so the
// density integrates to one.
struct ReverseEntropySolution {
    double beta = 0.0;
    AtomDistribution probs;
    double residual = 0.0;  // |sum_i Q_i lambda / (beta + L_i) - 1|
};

inline ReverseEntropySolution reverse_entropy_posterior(const ReferenceMeasure& q,
                                                        const EmpiricalRisk& risk,
                                                        double lambda) {
    detail::require_factor(lambda);
    detail::require(q.size() == risk.size(), "size mismatch");
    if (!detail::has_finite_supported_risk(q, risk))
        throw std::invalid_argument("posterior support empty: no finite risk on the reference support");

    const auto mass_at = [&](double beta) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
            s += q[i] * lambda / (beta + risk[i]);
        }
        return s;
    };

    double min_risk = kInf, max_risk = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
        min_risk = std::min(min_risk, risk[i]);
        max_risk = std::max(max_risk, risk[i]);
    }
    // Risks are >= 0, so the pole sits at beta = -min_risk <= 0 and the mass
    // is strictly decreasing on (0, inf).
    if (min_risk > 0.0) {
        const double at_zero = mass_at(0.0);
        if (!(at_zero > 1.0))
            throw infeasible_error("no normalizing root: mass at beta -> 0+ is " +
                                       std::to_string(at_zero),
                                   at_zero);
    }
    double a = min_risk > 0.0 ? 0.0 : std::numeric_limits<double>::min();
    double b = lambda * q.total_mass() * (max_risk + 1.0);
    while (mass_at(b) >= 1.0) b *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid == a || mid == b) break;
        if (mass_at(mid) >= 1.0)
            a = mid;
        else
            b = mid;
    }
    double beta = 0.5 * (a + b);
    // Newton polish; the bisection bracket already pins the root to machine
    // precision in beta, this tightens the residual itself.
    for (int it = 0; it < 8; ++it) {
        const double g = mass_at(beta) - 1.0;
        double dg = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
            const double d = beta + risk[i];
            dg -= q[i] * lambda / (d * d);
        }
        const double step = g / dg;
        if (!std::isfinite(step)) break;
        const double next = beta - step;
        if (next <= -min_risk) break;
        beta = next;
        if (std::fabs(g) <= 1e-14) break;
    }
    const double residual = std::fabs(mass_at(beta) - 1.0);
    if (residual > 1e-12)
        throw convergence_error("normalizing root residual " + std::to_string(residual));

    std::vector<double> probs(q.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
        probs[i] = q[i] * lambda / (beta + risk[i]);
    }
    double s = 0.0;
    for (double p : probs) s += p;
    for (double& p : probs) p /= s;
    return ReverseEntropySolution{beta, AtomDistribution(std::move(probs)), residual};
}

// Tightest solution whose divergence from the factor-lambda solution equals
// a budget c, searched over factors omega in (0, lambda].
struct ConstrainedSolution {
    double omega = 0.0;
    GibbsPosterior posterior;
};

inline ConstrainedSolution divergence_constrained_posterior(const ReferenceMeasure& q,
                                                            const EmpiricalRisk& risk,
                                                            double lambda, double c,
                                                            double tolerance = 1e-8) {
    detail::require_factor(lambda);
    detail::require(c >= 0.0 && !std::isnan(c), "divergence budget must be >= 0");
    GibbsPosterior anchor = gibbs_posterior(q, risk, lambda);
    if (c == 0.0) return ConstrainedSolution{lambda, std::move(anchor)};

    // Supremum of D(P*_omega || P*_lambda) over omega in (0, lambda]: the
    // omega -> 0+ limit concentrates on the minimum supported risk.
    double delta_star = kInf;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0.0) delta_star = std::min(delta_star, risk[i]);
    double mass_lstar = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0.0 && risk[i] <= delta_star + 1e-12) mass_lstar += q[i];
    const double sup = anchor.k0 + delta_star / lambda - std::log(mass_lstar);
    if (!is_separable(risk, q) || c >= sup - 1e-12)
        throw infeasible_error("divergence budget exceeds the achievable supremum", sup);

    const auto phi = [&](double omega) {
        const GibbsPosterior p = gibbs_posterior(q, risk, omega);
        return relative_entropy(p.probs, anchor.probs);
    };

    // phi falls from the supremum to 0 as omega rises to lambda; bracket by
    // halving, then bisect.
    double hi = lambda, lo = lambda / 2.0;
    while (phi(lo) < c) {
        hi = lo;
        lo /= 2.0;
        if (lo < 1e-300)
            throw infeasible_error("divergence budget unreachable at positive factors", sup);
    }
    double omega = lo;
    for (int it = 0; it < 500; ++it) {
        omega = 0.5 * (lo + hi);
        const double v = phi(omega);
        if (std::fabs(v - c) <= tolerance) break;
        if (v > c)
            lo = omega;
        else
            hi = omega;
        if (it == 499)
            throw convergence_error("constrained solution did not meet its tolerance");
    }
    return ConstrainedSolution{omega, gibbs_posterior(q, risk, omega)};
}

// Deterministic inverse-CDF draws; avoids std::discrete_distribution, whose
// stream is implementation-defined.
inline std::vector<std::size_t> sample(const GibbsPosterior& post, std::uint64_t seed,
                                       std::size_t count) {
    std::vector<double> cum(post.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cum.size(); ++i) {
        acc += post.probs[i];
        cum[i] = acc;
    }
    std::size_t last = cum.size() - 1;
    while (last > 0 && post.probs[last] <= 0.0) --last;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
        std::size_t idx =
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
        if (idx > last) idx = last;
        while (idx > 0 && post.probs[idx] <= 0.0) --idx;
        out.push_back(idx);
    }
    return out;
}

}  // namespace relent
