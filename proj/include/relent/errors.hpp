// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace relent {

// The requested quantity has no solution in the admissible domain:
// regularization factor outside the feasible set, divergence budget
// above the achievable supremum, no root for a normalization equation.
// When a finite supremum is known it travels with the exception.
class infeasible_error : public std::domain_error {
public:
    explicit infeasible_error(const std::string& what,
                              double supremum = std::numeric_limits<double>::quiet_NaN())
        : std::domain_error(what), supremum_(supremum) {}

    double supremum() const noexcept { return supremum_; }

private:
    double supremum_;
};

// A series tail test could not classify convergence within the truncation
// budget.  Carries the best bracket established so far.
class indeterminate_error : public std::runtime_error {
public:
    indeterminate_error(const std::string& what, double bracket_lo, double bracket_hi)
        : std::runtime_error(what), lo_(bracket_lo), hi_(bracket_hi) {}

    double bracket_lo() const noexcept { return lo_; }
    double bracket_hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

// An iterative solver exhausted its step budget before meeting its tolerance.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace relent
