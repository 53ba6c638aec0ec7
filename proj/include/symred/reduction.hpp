#pragma once

#include "symred/symmetry.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace symred {

/// Substitution of original jet coordinates (u, or first derivatives) by
/// expressions in x, untargeted coordinates, and unknown functions phi_k of
/// the reduced variables.  A reduced variable is either an original
/// independent or is defined by a `where` relation, which may refer to
/// targeted coordinates and is then implicit.
struct Ansatz {
    std::string name;
    std::vector<std::string> reduced;
    std::vector<std::string> unknowns;
    std::vector<Rewrite> targets;
    std::vector<std::pair<std::string, Expr>> where;
    std::vector<DomainConstraint> constraints;
    bool assume_positive = false;
};

/// Equations for the unknowns over the reduced variables, in solved form.
using ReducedSystem = EquationSystem;

JetSpace reduced_space(const Ansatz& a);

/// Total derivatives of expressions with every original coordinate expressed
/// through the ansatz.
class AnsatzCalculus {
public:
    AnsatzCalculus(const Ansatz& a, const JetSpace& original);

    /// Replaces every original coordinate obtained from a target by differentiation.
    Expr express(const Expr& e) const;
    /// D_x e, expressed through the ansatz.
    Expr derivative(const Expr& e, const std::string& x) const;
    Expr derivative(const Expr& e, const std::vector<std::string>& index) const;

    /// D_x r for every reduced variable r.
    Expr reduced_derivative(const std::string& r, const std::string& x) const;

    /// Solvability determinants of implicit definitions and the ansatz's own constraints.
    const std::vector<DomainConstraint>& constraints() const noexcept { return constraints_; }
    /// Implicitly defined reduced variables, solved numerically when sampling.
    const std::vector<ImplicitSymbol>& implicit_symbols() const noexcept { return implicit_; }

    const Ansatz& ansatz() const noexcept { return ansatz_; }
    const JetSpace& original() const noexcept { return original_; }
    const JetSpace& reduced() const noexcept { return reduced_; }

private:
    Expr raw_derivative(const Expr& e, const std::string& x) const;
    Expr express_coordinate(const JetCoord& c) const;

    Ansatz ansatz_;
    JetSpace original_;
    JetSpace reduced_;
    std::map<std::string, std::map<std::string, Expr>> dr_;
    mutable std::map<std::string, Expr> coord_cache_;
    std::vector<DomainConstraint> constraints_;
    std::vector<ImplicitSymbol> implicit_;
};

/// First derivatives of the targeted coordinates along each original independent.
std::map<std::string, Expr> ansatz_derivatives(const Ansatz& a, const JetSpace& js);

/// Residuals of the original system under the ansatz (plus cross-derivative
/// compatibility of first-derivative targets), labelled, before restriction.
std::vector<std::pair<std::string, Expr>> ansatz_residuals(const AnsatzCalculus& calc, const EquationSystem& original);

CheckReport verify_reduction(const Ansatz& a, const EquationSystem& original, const ReducedSystem& candidate,
                             std::uint64_t seed, const CheckOptions& opts = {});

struct Derivation {
    std::optional<ReducedSystem> system;
    std::string failure;
    std::vector<std::string> assumptions;
    CheckReport verification;
};

/// Splits ansatz residuals over the eliminated variables, solves each
/// coefficient equation for a leading derivative and verifies the result.
Derivation derive_reduction(const Ansatz& a, const EquationSystem& original, std::uint64_t seed,
                            const CheckOptions& opts = {});

/// u_{x1} = A, u_{x2} = B relating solutions w of `source` to solutions u of `target`.
struct BacklundRelation {
    JetSpace space;
    std::vector<Rewrite> relations;
    EquationSystem source;
    EquationSystem target;
    std::vector<DomainConstraint> constraints;
};

CheckReport verify_backlund(const BacklundRelation& bt, std::uint64_t seed, const CheckOptions& opts = {});

/// First derivatives of one dependent assigned by expressions that may refer
/// to the assigned derivatives themselves.
struct OverdeterminedSystem {
    JetSpace space;
    std::vector<Rewrite> assignments;
    std::vector<DomainConstraint> constraints;
    std::map<std::string, std::pair<Expr, Expr>> brackets; // optional root brackets per assigned coordinate
};

CheckReport check_overdetermined(const OverdeterminedSystem& sys, std::uint64_t seed, const CheckOptions& opts = {});

} // namespace symred
