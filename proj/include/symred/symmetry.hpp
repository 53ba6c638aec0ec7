#pragma once

#include "symred/jet.hpp"
#include "symred/parser.hpp"
#include "symred/zero_test.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace symred {

/// lead = rhs, with the leading derivative on the left.
struct Equation {
    std::string name;
    JetCoord lead;
    Expr rhs;

    Expr residual() const { return Expr::jet(lead) - rhs; }
};

struct EquationSystem {
    JetSpace space;
    std::vector<Equation> equations;
    std::vector<DomainConstraint> constraints;

    int order() const;
};

using Rewrite = std::pair<JetCoord, Expr>;

/// Rewrites leading coordinates (extras first, then the system's equations)
/// and every coordinate obtained from a lead by further differentiation,
/// until no rewritable coordinate remains.
Expr restrict_to_manifold(const Expr& e, const EquationSystem& sys, const std::vector<Rewrite>& extra = {},
                          int order_cap = 8);

enum class Verdict { pass, fail, inconclusive };

std::string_view verdict_name(Verdict v);

struct CheckOptions {
    SamplingSpec sampling;
    ZeroTestOptions zero;
    int order_cap = 8;
};

struct CheckReport {
    Verdict verdict = Verdict::inconclusive;
    std::vector<Expr> residuals;  // after restriction, before the zero test
    std::vector<std::string> labels;
    Point witness;
    double witness_value = 0.0;
    std::string failing;          // label of the residual that produced the witness
    Provenance provenance = Provenance::probabilistic;
    std::uint64_t seed = 0;
    ZeroTestOptions tolerances;
    double residual_max = 0.0;
    std::string note;
};

/// Zero-tests a batch of labelled residuals and packages the outcome.
CheckReport judge(std::vector<Expr> residuals, std::vector<std::string> labels, const SamplingSpec& sampling,
                  std::uint64_t seed, const ZeroTestOptions& zero);

CheckReport check_classical(const VectorField& vf, const EquationSystem& sys, std::uint64_t seed,
                            const CheckOptions& opts = {});

/// Invariant-surface conditions sum_j xi_j v_a[x_j] = eta_a, each solved for one derivative.
std::vector<Rewrite> invariant_surface_conditions(const VectorField& vf, const EquationSystem& sys);

CheckReport check_conditional(const VectorField& vf, const EquationSystem& sys, std::uint64_t seed,
                              const CheckOptions& opts = {});

CheckReport check_lie_backlund(const CanonicalOperator& op, const EquationSystem& ode, std::uint64_t seed,
                               const CheckOptions& opts = {});

struct NoveltyDiagnostic {
    std::size_t s = 0;
    int t = 0;
    EquationSystem constraint_system;
    std::vector<CheckReport> constraint_verdicts; // algebra operator vs constraint system
    std::vector<CheckReport> equation_verdicts;   // algebra operator vs the equation itself
    bool conclusion = false;
    std::vector<std::string> assumptions;
};

/// Constraint system xi_aj u_{x_j} = eta_a of an operator family.
EquationSystem family_constraints(const std::vector<VectorField>& family, const EquationSystem& sys);

NoveltyDiagnostic novelty_diagnostic(const std::vector<VectorField>& algebra, const std::vector<VectorField>& family,
                                     int t, const EquationSystem& sys, std::uint64_t seed,
                                     const CheckOptions& opts = {});

} // namespace symred
