#pragma once

// Floating-point validation of closed-form and implicit solutions.

#include "symred/symmetry.hpp"
#include "symred/zero_test.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace symred {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive Gauss-Kronrod integral of `integrand` in `var` over [a, b].
/// Throws ToleranceNotMet when the error estimate stays above `tol`.
QuadratureResult quadrature(const Expr& integrand, const std::string& var, double a, double b,
                            const ParameterBinding& binding = {}, double tol = 1e-10);

/// Root of `res` in `unknown` with every other symbol taken from `point`.
double solve_implicit(const Expr& res, const std::string& unknown, const Point& point,
                      const ParameterBinding& binding, double guess,
                      std::optional<std::pair<double, double>> bracket = std::nullopt);

/// x -> integral of `integrand` from `lower` to x, usable as an opaque function.
struct QuadratureTerm {
    std::string function;
    Expr integrand;
    std::string var;
    double lower = 0.0;
};

enum class SolutionKind { explicit_form, implicit_form, quadrature_backed };

/// Values of the dependent variables.  Implicit symbols are solved in order
/// before the values are evaluated; quadrature terms bind opaque functions.
struct SolutionForm {
    SolutionKind kind = SolutionKind::explicit_form;
    std::map<std::string, Expr> values;
    std::vector<ImplicitSymbol> implicit;
    std::vector<QuadratureTerm> quadratures;
    std::vector<DomainConstraint> constraints;
};

struct SamplePlan {
    std::map<std::string, Range> box;
    int count = 32;
    std::map<std::string, int> grid; // variables sampled on an evenly spaced grid over their box instead
    std::uint64_t seed = 1;
    int retry_budget = 1024;
    double h = 1e-4;
    std::optional<double> tolerance; // 1e-9 symbolic, 1e-4 finite differences
};

struct PointResidual {
    Point point;
    std::vector<double> residuals;
};

struct ResidualReport {
    Verdict verdict = Verdict::inconclusive;
    std::string method;
    double max_residual = 0.0;
    double tolerance = 0.0;
    std::vector<PointResidual> points;
    Point witness;
    int skipped = 0;
    int draws = 0;
    std::string note;
};

/// Exact symbolic derivatives of an explicit or quadrature-backed solution substituted into each equation.
ResidualReport residual_explicit(const SolutionForm& sol, const EquationSystem& eq, const SamplePlan& plan,
                                 const ParameterBinding& binding = {});

/// Central finite differences of the (possibly implicit) solution, equations of order at most 2.
ResidualReport residual_implicit(const SolutionForm& sol, const EquationSystem& eq, const SamplePlan& plan,
                                 const ParameterBinding& binding = {});

/// Binding extended by the solution's quadrature-backed functions.
ParameterBinding with_quadratures(const SolutionForm& sol, const ParameterBinding& binding);

} // namespace symred
