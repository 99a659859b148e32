#pragma once

#include "ncnd/rational.hpp"

#include <optional>
#include <vector>

namespace ncnd {

/// Exact small-scale linear programming for the oracle harness:
///   maximize c.x  subject to  A.x <= b, x >= 0,
/// solved by dense simplex with Bland's rule over rationals. Intended for
/// instances with a few dozen variables; everything is exact.
struct LinearProgram {
    std::vector<std::vector<Rational>> rows;  // A
    std::vector<Rational> rhs;                // b (must be >= 0)
    std::vector<Rational> objective;          // c

    int add_variable(Rational obj_coeff);
    /// Row of (variable, coefficient) pairs; rhs >= 0.
    void add_constraint(const std::vector<std::pair<int, Rational>>& terms, Rational bound);
};

struct LpSolution {
    Rational value;
    std::vector<Rational> x;
};

/// Empty optional means unbounded. Infeasibility cannot arise for b >= 0.
std::optional<LpSolution> lp_maximize(const LinearProgram& lp);

}  // namespace ncnd
