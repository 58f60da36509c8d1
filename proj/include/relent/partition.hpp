// SPDX-License-Identifier: Apache-2.0
#pragma once

// Log-partition function of the tilted reference measure and its cumulants.
//
//   K(t) = log sum_i Q_i exp(t * L_i)
//
// evaluated with a max-shift so that extreme tilts neither overflow nor lose
// the leading atom.  Atoms with t * L_i = -inf contribute exactly zero and
// are dropped before the shift; K(0) is log of the total mass.  Cumulants of
// the tilted measure are computed as exact moments of the tilted atom
// probabilities, never by differencing K.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "relent/measure.hpp"
#include "relent/risk.hpp"

namespace relent {

// Set of regularization factors lambda > 0 for which K(-1/lambda) < +inf.
// Finite-atom backends always yield the whole positive axis; lazily summed
// countable backends yield a bracketed boundary (see countable.hpp).
struct FeasibleSet {
    enum class Shape { empty, all_positive_reals, open_bounded, closed_bounded };

    Shape shape = Shape::empty;
    double b = kInf;            // boundary when bounded
    double b_tolerance = 0.0;   // half-width of the boundary bracket

    // Membership using the reported boundary.  For bracketed boundaries the
    // answer is only certified when lambda is outside [b - tol, b + tol].
    bool contains(double lambda) const noexcept {
        if (!(lambda > 0.0)) return false;
        switch (shape) {
            case Shape::empty: return false;
            case Shape::all_positive_reals: return true;
            case Shape::open_bounded: return lambda < b;
            case Shape::closed_bounded: return lambda <= b;
        }
        return false;
    }
};

struct CumulantReport {
    double lambda = 0.0;
    double k0 = 0.0;  // K(-1/lambda)
    double k1 = 0.0;  // tilted mean of the risk
    double k2 = 0.0;  // tilted variance
    double k3 = 0.0;  // tilted third central moment
};

namespace detail {

// Tilted atom probabilities p_i = Q_i exp(t L_i - K(t)) together with K(t).
// Atoms with zero weight or with t L_i = -inf get exact zeros.  Requires at
// least one contributing atom.
struct Tilted {
    std::vector<double> probs;
    double log_partition;
};

inline bool tilt_contributes(double w, double risk, double t) {
    if (w <= 0.0) return false;
    if (std::isinf(risk)) return t >= 0.0;  // exp(t * inf): 0 for t < 0, else dominates
    return true;
}

inline Tilted tilted_distribution(const ReferenceMeasure& q, const EmpiricalRisk& risk,
                                  double t) {
    require(q.size() == risk.size(), "size mismatch");
    require(std::isfinite(t), "tilt must be finite");
    const std::size_t m = q.size();
    std::vector<double> a(m, -kInf);
    double shift = -kInf;
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
        if (!tilt_contributes(q[i], risk[i], t)) continue;
        any = true;
        if (t > 0.0 && std::isinf(risk[i])) {
            a[i] = kInf;
        } else {
            // t == 0 makes exp(t*L) identically 1, also on infinite risks.
            a[i] = std::log(q[i]) + (t == 0.0 ? 0.0 : t * risk[i]);
        }
        shift = std::max(shift, a[i]);
    }
    if (!any) throw std::invalid_argument("tilted measure has empty support");
    Tilted out;
    out.probs.assign(m, 0.0);
    if (std::isinf(shift) && shift > 0.0) {
        out.log_partition = kInf;
        return out;  // probabilities not meaningful at an infinite partition
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (a[i] == -kInf) continue;
        out.probs[i] = std::exp(a[i] - shift);
        sum += out.probs[i];
    }
    for (double& p : out.probs) p /= sum;
    out.log_partition = shift + std::log(sum);
    return out;
}

}  // namespace detail

// K(t) = log sum_i Q_i exp(t L_i), in [-inf, +inf].
inline double log_partition(const ReferenceMeasure& q, const EmpiricalRisk& risk, double t) {
    detail::require(q.size() == risk.size(), "size mismatch");
    detail::require(std::isfinite(t), "tilt must be finite");
    bool any = false;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (detail::tilt_contributes(q[i], risk[i], t)) any = true;
    if (!any) return -kInf;  // empty effective support: log of a zero sum
    return detail::tilted_distribution(q, risk, t).log_partition;
}

// Finite-atom backend: every positive factor keeps the partition finite.
inline FeasibleSet feasible_set(const ReferenceMeasure& q, const EmpiricalRisk& risk) {
    detail::require(q.size() == risk.size(), "size mismatch");
    FeasibleSet f;
    f.shape = FeasibleSet::Shape::all_positive_reals;
    f.b = kInf;
    f.b_tolerance = 0.0;
    return f;
}

namespace detail {

inline void require_factor(double lambda) {
    require(std::isfinite(lambda) && lambda > 0.0, "factor lambda must be positive");
}

inline bool has_finite_supported_risk(const ReferenceMeasure& q, const EmpiricalRisk& risk) {
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] > 0.0 && std::isfinite(risk[i])) return true;
    return false;
}

}  // namespace detail

// First three cumulants of the risk under the tilt t = -1/lambda, plus K.
inline CumulantReport cumulants(const ReferenceMeasure& q, const EmpiricalRisk& risk,
                                double lambda) {
    detail::require_factor(lambda);
    if (!detail::has_finite_supported_risk(q, risk))
        throw std::invalid_argument("no supported atom with finite risk");
    const auto tilt = detail::tilted_distribution(q, risk, -1.0 / lambda);
    CumulantReport r;
    r.lambda = lambda;
    r.k0 = tilt.log_partition;
    double mean = 0.0, lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < tilt.probs.size(); ++i) {
        if (tilt.probs[i] <= 0.0) continue;
        mean += tilt.probs[i] * risk[i];
        lo = std::min(lo, risk[i]);
        hi = std::max(hi, risk[i]);
    }
    if (hi - lo <= risk.tie_tolerance()) {
        // Nonseparable on the tilted support: the higher cumulants vanish
        // identically, and rounding in the normalized weights must not leak
        // a spurious positive variance.
        r.k1 = hi == lo ? lo : mean;
        r.k2 = 0.0;
        r.k3 = 0.0;
        return r;
    }
    double m2 = 0.0, m3 = 0.0;
    for (std::size_t i = 0; i < tilt.probs.size(); ++i) {
        if (tilt.probs[i] <= 0.0) continue;
        const double c = risk[i] - mean;
        m2 += tilt.probs[i] * c * c;
        m3 += tilt.probs[i] * c * c * c;
    }
    r.k1 = mean;
    r.k2 = m2;
    r.k3 = m3;
    return r;
}

// Cumulant generating function of the risk under the solution measure:
//   J(t) = K(t - 1/lambda) - K(-1/lambda),  always <= 0 for t <= 0.
inline double cgf(const ReferenceMeasure& q, const EmpiricalRisk& risk, double lambda,
                  double t) {
    detail::require_factor(lambda);
    if (!detail::has_finite_supported_risk(q, risk))
        throw std::invalid_argument("no supported atom with finite risk");
    const double k_ref = log_partition(q, risk, -1.0 / lambda);
    const double k_arg = log_partition(q, risk, t - 1.0 / lambda);
    if (std::isinf(k_arg) && k_arg > 0.0) return kInf;
    return k_arg - k_ref;
}

// Supremum of sqrt(K''(xi)) over negative tilts xi.
struct SubgaussianBeta {
    double value = 0.0;        // the supremum estimate, <= ceiling
    double ceiling = 0.0;      // (range of supported finite risks) / 2
    bool attained = false;     // true if the maximizer is an interior tilt
    double argmax = 0.0;       // maximizing tilt when attained, else 0
};

namespace detail {

// K''(t): variance of the risk under the tilted measure.  Negative tilts
// zero out infinite risks, so only supported finite values matter.
inline double tilted_variance(const ReferenceMeasure& q, const EmpiricalRisk& risk, double t) {
    const auto tilt = tilted_distribution(q, risk, t);
    double mean = 0.0;
    for (std::size_t i = 0; i < tilt.probs.size(); ++i)
        if (tilt.probs[i] > 0.0) mean += tilt.probs[i] * risk[i];
    double m2 = 0.0;
    for (std::size_t i = 0; i < tilt.probs.size(); ++i) {
        if (tilt.probs[i] <= 0.0) continue;
        const double c = risk[i] - mean;
        m2 += tilt.probs[i] * c * c;
    }
    return m2;
}

// Limit of the tilted variance as the tilt approaches 0 from below: the
// reference restricted to finite risks, normalized.  Infinite risks carry no
// mass at any negative tilt, so they stay excluded in the limit.
inline double boundary_variance(const ReferenceMeasure& q, const EmpiricalRisk& risk) {
    double mass = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
        mass += q[i];
        mean += q[i] * risk[i];
    }
    mean /= mass;
    double m2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
        const double c = risk[i] - mean;
        m2 += (q[i] / mass) * c * c;
    }
    return m2;
}

}  // namespace detail

// Multistart maximization of the tilted variance over xi < 0, with the
// boundary limit xi -> 0- evaluated separately.  Returns +inf ceiling/value
// only through genuinely unbounded risks, which finite atoms cannot produce.
inline SubgaussianBeta subgaussian_beta(const ReferenceMeasure& q, const EmpiricalRisk& risk) {
    detail::require(q.size() == risk.size(), "size mismatch");
    if (!detail::has_finite_supported_risk(q, risk))
        throw std::invalid_argument("no supported atom with finite risk");

    double lo = kInf, hi = -kInf, min_pos_weight = kInf;
    std::vector<double> finite_values;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
        lo = std::min(lo, risk[i]);
        hi = std::max(hi, risk[i]);
        min_pos_weight = std::min(min_pos_weight, q[i]);
        finite_values.push_back(risk[i]);
    }
    SubgaussianBeta out;
    out.ceiling = (hi - lo) / 2.0;
    if (hi - lo <= 0.0) return out;  // constant risk: zero variance everywhere

    // Smallest positive gap above the minimum decides how far a negative
    // tilt must go before the measure concentrates to within 1e-12.
    double gap = hi - lo;
    for (double v : finite_values)
        if (v > lo) gap = std::min(gap, v - lo);
    const double mass_ratio = q.total_mass() / min_pos_weight;
    const double reach = std::min(1e6, (std::log(1e12) + std::log(mass_ratio)) / gap);

    const auto k2 = [&](double xi) { return detail::tilted_variance(q, risk, xi); };

    // Boundary limit xi -> 0-: the tilt flattens to the reference restricted
    // to finite risks, a well-defined variance.
    const double var0 = detail::boundary_variance(q, risk);
    double best = var0;
    double best_xi = 0.0;
    bool interior = false;

    constexpr int kStarts = 32;
    std::vector<double> grid(kStarts);
    const double xi_max = -std::min(1e-6, reach * 1e-3);
    const double xi_min = -reach;
    for (int s = 0; s < kStarts; ++s) {
        const double f = static_cast<double>(s) / (kStarts - 1);
        grid[s] = -std::exp(std::log(-xi_max) + f * (std::log(-xi_min) - std::log(-xi_max)));
    }
    std::sort(grid.begin(), grid.end());
    int best_idx = -1;
    for (int s = 0; s < kStarts; ++s) {
        const double v = k2(grid[s]);
        if (v > best) {
            best = v;
            best_xi = grid[s];
            best_idx = s;
        }
    }
    if (best_idx >= 0) {
        // Golden-section refinement between the grid neighbors of the best
        // start.
        double a = best_idx > 0 ? grid[best_idx - 1] : grid[best_idx] * 2.0;
        double b = best_idx + 1 < kStarts ? grid[best_idx + 1] : xi_max;
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = k2(x1), f2 = k2(x2);
        for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, std::fabs(a)); ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = k2(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = k2(x1);
            }
        }
        const double xi_ref = (a + b) / 2.0;
        const double v_ref = k2(xi_ref);
        if (v_ref > best) {
            best = v_ref;
            best_xi = xi_ref;
        }
        interior = best_xi < xi_max && best > var0 * (1.0 + 1e-13);
    }

    // Popoviciu: the variance of a [lo, hi] variable never exceeds
    // (hi - lo)^2 / 4, so the estimate is clamped by construction.
    out.value = std::min(std::sqrt(std::max(best, 0.0)), out.ceiling);
    out.attained = interior;
    out.argmax = interior ? best_xi : 0.0;
    return out;
}

}  // namespace relent
