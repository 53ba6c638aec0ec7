#include "symred/linear.hpp"

namespace symred {

Expr determinant(const Matrix& a)
{
    const std::size_t n = a.size();
    if (n == 0) {
        return Expr(1);
    }
    if (n == 1) {
        return a[0][0];
    }
    std::vector<Expr> terms;
    for (std::size_t j = 0; j < n; ++j) {
        if (a[0][j].is_zero()) {
            continue;
        }
        Matrix minor;
        for (std::size_t i = 1; i < n; ++i) {
            std::vector<Expr> row;
            for (std::size_t k = 0; k < n; ++k) {
                if (k != j) {
                    row.push_back(a[i][k]);
                }
            }
            minor.push_back(std::move(row));
        }
        const Expr sign = j % 2 == 0 ? Expr(1) : Expr(-1);
        terms.push_back(sign * a[0][j] * determinant(minor));
    }
    return make_sum(std::move(terms));
}

std::optional<std::vector<Expr>> solve_linear(Matrix a, std::vector<Expr> b)
{
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && simplify(a[pivot][col]).is_zero()) {
            ++pivot;
        }
        if (pivot == n) {
            return std::nullopt;
        }
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            if (a[r][col].is_zero()) {
                continue;
            }
            const Expr f = a[r][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) {
                a[r][k] = simplify(a[r][k] - f * a[col][k]);
            }
            b[r] = simplify(b[r] - f * b[col]);
        }
    }
    std::vector<Expr> y(n);
    for (std::size_t i = n; i-- > 0;) {
        std::vector<Expr> terms{b[i]};
        for (std::size_t k = i + 1; k < n; ++k) {
            terms.push_back(-a[i][k] * y[k]);
        }
        y[i] = simplify(make_sum(std::move(terms)) / a[i][i]);
    }
    return y;
}

} // namespace symred
