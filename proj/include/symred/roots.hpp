#pragma once

#include <functional>
#include <optional>
#include <utility>

namespace symred {

struct RootResult {
    double x = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Damped Newton iteration on a scalar function with a numeric derivative,
/// falling back to bisection when a sign-change bracket is supplied.  Throws
/// NoConvergence after `max_iter` steps without |f| < tol.
RootResult find_root(const std::function<double(double)>& f, double guess,
                     std::optional<std::pair<double, double>> bracket = std::nullopt, double tol = 1e-12,
                     int max_iter = 100);

} // namespace symred
