// SPDX-License-Identifier: Apache-2.0
#pragma once

// Empirical risk over a finite model space.
//
// Risks live in [0, +inf]; an infinite entry marks a model that the loss
// rejects outright.  Expectations use the 0 * inf = 0 convention, so a
// posterior that puts no mass on an infinite-risk atom still has finite
// expected risk.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "relent/measure.hpp"

namespace relent {

struct Dataset {
    std::vector<std::vector<double>> patterns;
    std::vector<double> labels;

    std::size_t size() const noexcept { return labels.size(); }
};

inline void validate(const Dataset& data) {
    detail::require(!data.labels.empty(), "dataset needs at least one record");
    detail::require(data.patterns.size() == data.labels.size(),
                    "dataset needs one pattern per label");
    const std::size_t d = data.patterns.front().size();
    for (const auto& x : data.patterns)
        detail::require(x.size() == d, "patterns must share one dimension");
}

// Prediction model plus per-example loss.  The loss must be >= 0; +inf is
// allowed and marks hard rejection.
struct LossSpec {
    std::function<double(const std::vector<double>& theta, const std::vector<double>& x)>
        predictor;
    std::function<double(double predicted, double label)> loss;
};

inline LossSpec squared_loss_linear() {
    LossSpec s;
    s.predictor = [](const std::vector<double>& theta, const std::vector<double>& x) {
        detail::require(theta.size() == x.size(), "predictor dimension mismatch");
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) v += theta[i] * x[i];
        return v;
    };
    s.loss = [](double yhat, double y) {
        const double r = yhat - y;
        return r * r;
    };
    return s;
}

inline LossSpec absolute_loss_linear() {
    LossSpec s = squared_loss_linear();
    s.loss = [](double yhat, double y) { return std::fabs(yhat - y); };
    return s;
}

// Sign predictor with 0/1 loss, for +-1 labels.
inline LossSpec zero_one_loss_threshold() {
    LossSpec s;
    s.predictor = [](const std::vector<double>& theta, const std::vector<double>& x) {
        detail::require(theta.size() == x.size(), "predictor dimension mismatch");
        double v = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) v += theta[i] * x[i];
        return v >= 0.0 ? 1.0 : -1.0;
    };
    s.loss = [](double yhat, double y) { return yhat == y ? 0.0 : 1.0; };
    return s;
}

// Tie tolerance used when comparing risk values computed from data; values
// closer than this are treated as equal.
inline constexpr double kDatasetTieTolerance = 1e-12;

class EmpiricalRisk {
public:
    explicit EmpiricalRisk(std::vector<double> values, double tie_tolerance = 0.0)
        : values_(std::move(values)), tie_tolerance_(tie_tolerance) {
        detail::require(!values_.empty(), "risk needs at least one atom");
        detail::require(tie_tolerance_ >= 0.0, "tie tolerance must be >= 0");
        for (double v : values_)
            detail::require(!std::isnan(v) && v >= 0.0, "risk values must be in [0, +inf]");
    }

    const std::vector<double>& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_.at(i); }
    std::size_t size() const noexcept { return values_.size(); }
    double tie_tolerance() const noexcept { return tie_tolerance_; }

private:
    std::vector<double> values_;
    double tie_tolerance_;
};

// Mean per-example loss of every model on the dataset.
inline EmpiricalRisk empirical_risk(const ModelSpace& space, const Dataset& data,
                                    const LossSpec& spec) {
    validate(space);
    validate(data);
    detail::require(!space.coords.empty(), "empirical risk needs model coordinates");
    detail::require(static_cast<bool>(spec.predictor) && static_cast<bool>(spec.loss),
                    "loss spec must provide predictor and loss");
    std::vector<double> values(space.size, 0.0);
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < space.size; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double l = spec.loss(spec.predictor(space.coords[i], data.patterns[j]),
                                       data.labels[j]);
            if (std::isnan(l) || l < 0.0)
                throw std::domain_error("loss returned a value outside [0, +inf]");
            acc += l;
            if (std::isinf(acc)) break;
        }
        values[i] = std::isinf(acc) ? kInf : acc / n;
    }
    return EmpiricalRisk(std::move(values), kDatasetTieTolerance);
}

// E_P[risk] with 0 * inf = 0; +inf as soon as mass sits on an infinite risk.
inline double expected_risk(const EmpiricalRisk& risk, const AtomDistribution& p) {
    detail::require(risk.size() == p.size(), "size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (std::isinf(risk[i])) return kInf;
        acc += p[i] * risk[i];
    }
    return acc;
}

// Raw-mass expectation against a reference measure (not normalized).
inline double expected_risk(const EmpiricalRisk& risk, const ReferenceMeasure& q) {
    detail::require(risk.size() == q.size(), "size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        if (std::isinf(risk[i])) return kInf;
        acc += q[i] * risk[i];
    }
    return acc;
}

// True iff the reference support carries two finite risk values that differ
// by more than the risk's tie tolerance.  Nonseparable risks are constant on
// the support, and the regularized solution is then reference-shaped at
// every factor.
inline bool is_separable(const EmpiricalRisk& risk, const ReferenceMeasure& q) {
    detail::require(risk.size() == q.size(), "size mismatch");
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0 || std::isinf(risk[i])) continue;
        lo = std::min(lo, risk[i]);
        hi = std::max(hi, risk[i]);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) return false;
    return hi - lo > risk.tie_tolerance();
}

}  // namespace relent
