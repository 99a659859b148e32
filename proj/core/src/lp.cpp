#include "ncnd/lp.hpp"

#include <stdexcept>

namespace ncnd {

int LinearProgram::add_variable(Rational obj_coeff) {
    objective.push_back(std::move(obj_coeff));
    for (auto& row : rows) row.push_back(Rational(0));
    return static_cast<int>(objective.size()) - 1;
}

void LinearProgram::add_constraint(const std::vector<std::pair<int, Rational>>& terms,
                                   Rational bound) {
    if (bound < 0) throw std::invalid_argument("constraint bound must be nonnegative");
    std::vector<Rational> row(objective.size(), Rational(0));
    for (const auto& [var, coeff] : terms) row.at(var) += coeff;
    rows.push_back(std::move(row));
    rhs.push_back(std::move(bound));
}

std::optional<LpSolution> lp_maximize(const LinearProgram& lp) {
    const int n = static_cast<int>(lp.objective.size());
    const int m = static_cast<int>(lp.rows.size());

    // Standard full tableau with slack variables; basis starts as the slacks.
    // Bland's rule guarantees termination.
    std::vector<std::vector<Rational>> t(m + 1, std::vector<Rational>(n + m + 1, Rational(0)));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t[i][j] = lp.rows[i][j];
        t[i][n + i] = 1;
        t[i][n + m] = lp.rhs[i];
    }
    for (int j = 0; j < n; ++j) t[m][j] = -lp.objective[j];

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    while (true) {
        int pivot_col = -1;
        for (int j = 0; j < n + m; ++j)
            if (t[m][j] < 0) {
                pivot_col = j;
                break;
            }
        if (pivot_col < 0) break;

        int pivot_row = -1;
        Rational best_ratio;
        for (int i = 0; i < m; ++i) {
            if (t[i][pivot_col] <= 0) continue;
            Rational ratio = t[i][n + m] / t[i][pivot_col];
            if (pivot_row < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis[i] < basis[pivot_row])) {
                pivot_row = i;
                best_ratio = ratio;
            }
        }
        if (pivot_row < 0) return std::nullopt;  // unbounded

        Rational p = t[pivot_row][pivot_col];
        for (auto& cell : t[pivot_row]) cell /= p;
        for (int i = 0; i <= m; ++i) {
            if (i == pivot_row) continue;
            Rational factor = t[i][pivot_col];
            if (factor == 0) continue;
            for (int j = 0; j <= n + m; ++j) t[i][j] -= factor * t[pivot_row][j];
        }
        basis[pivot_row] = pivot_col;
    }

    LpSolution sol;
    sol.x.assign(n, Rational(0));
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) sol.x[basis[i]] = t[i][n + m];
    sol.value = t[m][n + m];
    return sol;
}

}  // namespace ncnd
