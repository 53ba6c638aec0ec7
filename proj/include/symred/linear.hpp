#pragma once

#include "symred/expr.hpp"

#include <optional>
#include <vector>

namespace symred {

using Matrix = std::vector<std::vector<Expr>>;

/// Determinant by cofactor expansion (intended for the small systems met here).
Expr determinant(const Matrix& a);

/// Solves a y = b by Gaussian elimination with symbolic pivots.  Returns
/// nullopt when every candidate pivot of a column is identically zero.
std::optional<std::vector<Expr>> solve_linear(Matrix a, std::vector<Expr> b);

} // namespace symred
