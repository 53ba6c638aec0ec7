#pragma once

#include "symred/expr.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace symred {

/// Independent and dependent variables of a jet space.  Every dependent is a
/// function of all independents.
///
/// A space may be promoted: a former dependent u becomes the coordinate
/// `promoted`, and its first derivatives u_{x_i} become the dependents listed
/// in `first_derivatives` (one per original independent).  The promoted total
/// derivative is then D_i + v^i D_promoted.
class JetSpace {
public:
    JetSpace() = default;
    JetSpace(std::vector<std::string> independents, std::vector<std::string> dependents, int max_order = 8);

    static JetSpace promoted(std::vector<std::string> original_independents, std::string promoted,
                             std::vector<std::string> first_derivatives, std::vector<std::string> extra_dependents = {},
                             int max_order = 8);

    const std::vector<std::string>& independents() const noexcept { return independents_; }
    const std::vector<std::string>& dependents() const noexcept { return dependents_; }
    int max_order() const noexcept { return max_order_; }
    bool has_independent(const std::string& x) const;
    bool has_dependent(const std::string& u) const;

    bool is_promoted() const noexcept { return promoted_.has_value(); }
    const std::optional<std::string>& promoted_variable() const noexcept { return promoted_; }
    /// v^i for original independent x_i of a promoted space.
    std::optional<std::string> first_derivative_of(const std::string& x) const;

    /// D_x e = de/dx + sum over jet coordinates c of e of c_x * de/dc.
    Expr total_derivative(const Expr& e, const std::string& x) const;
    /// D_J e for a multi-index J.
    Expr total_derivative(const Expr& e, const std::vector<std::string>& index) const;
    /// On a promoted space, D_x + v^x D_promoted; the plain total derivative otherwise.
    Expr promoted_total_derivative(const Expr& e, const std::string& x) const;

    /// Jet coordinates of this space occurring in e.
    std::vector<JetCoord> jet_coordinates(const Expr& e) const;
    int order_of(const Expr& e) const;

private:
    std::vector<std::string> independents_;
    std::vector<std::string> dependents_;
    int max_order_ = 8;
    std::optional<std::string> promoted_;
    std::map<std::string, std::string> first_derivative_;
};

/// Point operator xi_j d/dx_j + eta_a d/du_a.  Missing components are zero.
struct VectorField {
    std::map<std::string, Expr> xi;
    std::map<std::string, Expr> eta;

    Expr xi_of(const std::string& x) const;
    Expr eta_of(const std::string& u) const;
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator*(const Expr& k, const VectorField& a);

/// Evolutionary operator U_a d/du_a; its prolongation coefficients are D_J U_a.
struct CanonicalOperator {
    std::map<std::string, Expr> characteristic;
};

/// Prolongation of a point operator.  Coefficients are produced on demand by
/// coeff(a, J + e_i) = D_i coeff(a, J) - sum_j u_{a, J + e_j} D_i xi_j and memoized.
class ProlongedField {
public:
    ProlongedField(VectorField base, int order, JetSpace space);

    const VectorField& base() const noexcept { return base_; }
    int order() const noexcept { return order_; }
    const JetSpace& space() const noexcept { return space_; }

    /// Throws InsufficientProlongationOrder beyond the prolongation order.
    Expr coefficient(const JetCoord& c) const;

private:
    struct Cache;
    VectorField base_;
    int order_;
    JetSpace space_;
    std::shared_ptr<Cache> cache_;
};

ProlongedField prolong(const VectorField& vf, int order, const JetSpace& js);

/// Canonical operators prolong with xi = 0, up to the space's maximum order.
ProlongedField prolong(const CanonicalOperator& op, const JetSpace& js);

/// sum xi_j de/dx_j + sum coeff(c) de/dc over the jet coordinates c of e.
Expr apply_operator(const ProlongedField& pf, const Expr& e);
Expr apply_operator(const CanonicalOperator& op, const Expr& e, const JetSpace& js);

} // namespace symred
