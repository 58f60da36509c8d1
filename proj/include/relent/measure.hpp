// SPDX-License-Identifier: Apache-2.0
#pragma once

// Weighted finite model spaces and the generalized relative entropy.
//
// A reference measure assigns a nonnegative weight to each model.  It does
// not have to be a probability measure: counting measures and quadrature
// discretizations of the Lebesgue measure are first-class, and the relative
// entropy with respect to them can be negative.  Absolute continuity is a
// hard requirement, not a convention: probability mass on an atom of
// reference weight zero is caller misuse and throws.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "relent/errors.hpp"

namespace relent {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// |total mass - 1| below this means "behaves as a probability measure".
inline constexpr double kProbabilityMassTolerance = 1e-9;

// Probability vectors must sum to 1 within this bound.
inline constexpr double kDistributionSumTolerance = 1e-12;

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool is_finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Model space: m atoms, optionally embedded in R^d.

struct ModelSpace {
    std::size_t size = 0;
    // Either empty or one row of length `dim` per atom.
    std::vector<std::vector<double>> coords;
    std::size_t dim = 0;
    // Either empty or one unique label per atom.
    std::vector<std::string> labels;
};

inline void validate(const ModelSpace& space) {
    detail::require(space.size >= 1, "model space needs at least one atom");
    if (!space.coords.empty()) {
        detail::require(space.coords.size() == space.size,
                        "coords must have one row per atom");
        for (const auto& row : space.coords)
            detail::require(row.size() == space.dim, "coords row has wrong dimension");
    }
    if (!space.labels.empty()) {
        detail::require(space.labels.size() == space.size,
                        "labels must have one entry per atom");
        for (std::size_t i = 0; i < space.labels.size(); ++i)
            for (std::size_t j = i + 1; j < space.labels.size(); ++j)
                detail::require(space.labels[i] != space.labels[j],
                                "labels must be unique");
    }
}

inline ModelSpace make_model_space(std::size_t m) {
    ModelSpace s;
    s.size = m;
    validate(s);
    return s;
}

inline ModelSpace make_model_space(std::vector<std::vector<double>> coords) {
    ModelSpace s;
    s.size = coords.size();
    s.dim = coords.empty() ? 0 : coords.front().size();
    s.coords = std::move(coords);
    validate(s);
    return s;
}

// ---------------------------------------------------------------------------
// Reference measure over the atoms.

enum class MeasureKind { probability, counting, quadrature, custom };

inline const char* to_string(MeasureKind k) {
    switch (k) {
        case MeasureKind::probability: return "probability";
        case MeasureKind::counting: return "counting";
        case MeasureKind::quadrature: return "quadrature";
        case MeasureKind::custom: return "custom";
    }
    return "custom";
}

class ReferenceMeasure {
public:
    ReferenceMeasure(MeasureKind kind, std::vector<double> weights, double cell_volume = 1.0)
        : kind_(kind), weights_(std::move(weights)), cell_volume_(cell_volume) {
        detail::require(!weights_.empty(), "measure needs at least one atom");
        total_mass_ = 0.0;
        for (double w : weights_) {
            detail::require(detail::is_finite_nonneg(w), "weights must be finite and >= 0");
            total_mass_ += w;
        }
        detail::require(total_mass_ > 0.0, "measure must have nonempty support");
        if (kind_ == MeasureKind::probability)
            detail::require(std::fabs(total_mass_ - 1.0) <= kProbabilityMassTolerance,
                            "probability measure must have total mass 1");
        if (kind_ == MeasureKind::counting)
            for (double w : weights_)
                detail::require(w == 0.0 || w == 1.0, "counting measure weights must be 0 or 1");
        if (kind_ == MeasureKind::quadrature)
            detail::require(std::isfinite(cell_volume_) && cell_volume_ > 0.0,
                            "quadrature cell volume must be positive");
    }

    MeasureKind kind() const noexcept { return kind_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double operator[](std::size_t i) const { return weights_.at(i); }
    std::size_t size() const noexcept { return weights_.size(); }
    double total_mass() const noexcept { return total_mass_; }
    double cell_volume() const noexcept { return cell_volume_; }

    // Mass-based detection; the kind tag is advisory.
    bool is_probability() const noexcept {
        return std::fabs(total_mass_ - 1.0) <= kProbabilityMassTolerance;
    }

    std::size_t support_size() const noexcept {
        std::size_t n = 0;
        for (double w : weights_)
            if (w > 0.0) ++n;
        return n;
    }

private:
    MeasureKind kind_;
    std::vector<double> weights_;
    double cell_volume_;
    double total_mass_;
};

inline ReferenceMeasure probability_measure(std::vector<double> weights) {
    return ReferenceMeasure(MeasureKind::probability, std::move(weights));
}

inline ReferenceMeasure counting_measure(std::size_t m) {
    return ReferenceMeasure(MeasureKind::counting, std::vector<double>(m, 1.0));
}

inline ReferenceMeasure custom_measure(std::vector<double> weights) {
    return ReferenceMeasure(MeasureKind::custom, std::move(weights));
}

// Uniform-grid discretization of Lebesgue measure: every atom carries one
// cell volume of mass.
inline ReferenceMeasure quadrature_lebesgue(std::size_t m, double cell_volume) {
    return ReferenceMeasure(MeasureKind::quadrature,
                            std::vector<double>(m, cell_volume), cell_volume);
}

inline ReferenceMeasure quadrature_lebesgue(const ModelSpace& space, double cell_volume) {
    validate(space);
    return quadrature_lebesgue(space.size, cell_volume);
}

// ---------------------------------------------------------------------------
// Probability distribution over the atoms.

class AtomDistribution {
public:
    explicit AtomDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
        detail::require(!probs_.empty(), "distribution needs at least one atom");
        double sum = 0.0;
        for (double p : probs_) {
            detail::require(detail::is_finite_nonneg(p), "probabilities must be finite and >= 0");
            sum += p;
        }
        detail::require(std::fabs(sum - 1.0) <= kDistributionSumTolerance,
                        "probabilities must sum to 1");
    }

    const std::vector<double>& probs() const noexcept { return probs_; }
    double operator[](std::size_t i) const { return probs_.at(i); }
    std::size_t size() const noexcept { return probs_.size(); }

    std::vector<std::size_t> support() const {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < probs_.size(); ++i)
            if (probs_[i] > 0.0) s.push_back(i);
        return s;
    }

private:
    std::vector<double> probs_;
};

// Point mass on one atom.
inline AtomDistribution point_mass(std::size_t m, std::size_t atom) {
    detail::require(atom < m, "point mass atom out of range");
    std::vector<double> p(m, 0.0);
    p[atom] = 1.0;
    return AtomDistribution(std::move(p));
}

inline bool is_absolutely_continuous(const std::vector<double>& p,
                                     const std::vector<double>& q) {
    detail::require(p.size() == q.size(), "size mismatch");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0 && q[i] <= 0.0) return false;
    return true;
}

inline bool is_absolutely_continuous(const AtomDistribution& p, const ReferenceMeasure& q) {
    return is_absolutely_continuous(p.probs(), q.weights());
}

inline bool is_absolutely_continuous(const AtomDistribution& p, const AtomDistribution& q) {
    return is_absolutely_continuous(p.probs(), q.probs());
}

namespace detail {

// sum_{p_i > 0} p_i log(p_i / q_i) with the 0 log 0 = 0 convention.
// Mass where q vanishes is a domain error, not +inf.
inline double kl_sum(const std::vector<double>& p, const std::vector<double>& q) {
    require(p.size() == q.size(), "size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0)
            throw std::domain_error("relative entropy: not absolutely continuous at atom " +
                                    std::to_string(i));
        d += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    return d;
}

// Same sum but support violations yield +inf.  For mixtures of posteriors
// whose supports disagree the divergence genuinely diverges.
inline double kl_sum_or_infinity(const std::vector<double>& p, const std::vector<double>& q) {
    require(p.size() == q.size(), "size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInf;
        d += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    return d;
}

}  // namespace detail

// Generalized relative entropy D(P || Q).  Q need not be normalized; for
// reference measures of total mass above 1 the value can be negative.
inline double relative_entropy(const AtomDistribution& p, const ReferenceMeasure& q) {
    return detail::kl_sum(p.probs(), q.weights());
}

inline double relative_entropy(const AtomDistribution& p, const AtomDistribution& q) {
    return detail::kl_sum(p.probs(), q.probs());
}

// Convex mixture w*a + (1-w)*b.
inline AtomDistribution mix(const AtomDistribution& a, const AtomDistribution& b, double w) {
    detail::require(a.size() == b.size(), "size mismatch");
    detail::require(std::isfinite(w) && w >= 0.0 && w <= 1.0, "mixture weight must be in [0,1]");
    std::vector<double> p(a.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = w * a[i] + (1.0 - w) * b[i];
    return AtomDistribution(std::move(p));
}

}  // namespace relent
