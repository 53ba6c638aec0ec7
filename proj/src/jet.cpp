#include "symred/jet.hpp"

#include "symred/error.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

namespace symred {

JetSpace::JetSpace(std::vector<std::string> independents, std::vector<std::string> dependents, int max_order)
    : independents_(std::move(independents)), dependents_(std::move(dependents)), max_order_(max_order)
{
}

JetSpace JetSpace::promoted(std::vector<std::string> original_independents, std::string promoted,
                            std::vector<std::string> first_derivatives, std::vector<std::string> extra_dependents,
                            int max_order)
{
    if (first_derivatives.size() != original_independents.size()) {
        throw Error("promotion needs one first-derivative name per independent variable");
    }
    JetSpace js;
    js.independents_ = original_independents;
    js.independents_.push_back(promoted);
    js.dependents_ = first_derivatives;
    js.dependents_.insert(js.dependents_.end(), extra_dependents.begin(), extra_dependents.end());
    js.max_order_ = max_order;
    js.promoted_ = std::move(promoted);
    for (std::size_t i = 0; i < original_independents.size(); ++i) {
        js.first_derivative_[original_independents[i]] = first_derivatives[i];
    }
    return js;
}

bool JetSpace::has_independent(const std::string& x) const
{
    return std::find(independents_.begin(), independents_.end(), x) != independents_.end();
}

bool JetSpace::has_dependent(const std::string& u) const
{
    return std::find(dependents_.begin(), dependents_.end(), u) != dependents_.end();
}

std::optional<std::string> JetSpace::first_derivative_of(const std::string& x) const
{
    if (auto it = first_derivative_.find(x); it != first_derivative_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::vector<JetCoord> JetSpace::jet_coordinates(const Expr& e) const
{
    std::vector<JetCoord> out;
    for (const auto& v : free_variables(e)) {
        if (v.is(Kind::jet) && has_dependent(v.name())) {
            out.push_back(v.jet_coord());
        }
    }
    return out;
}

int JetSpace::order_of(const Expr& e) const
{
    int order = 0;
    for (const auto& c : jet_coordinates(e)) {
        order = std::max(order, c.order());
    }
    return order;
}

Expr JetSpace::total_derivative(const Expr& e, const std::string& x) const
{
    std::vector<Expr> terms{diff(e, Expr::symbol(x))};
    for (const auto& c : jet_coordinates(e)) {
        terms.push_back(Expr::jet(c.raised(x)) * diff(e, Expr::jet(c)));
    }
    return make_sum(std::move(terms));
}

Expr JetSpace::total_derivative(const Expr& e, const std::vector<std::string>& index) const
{
    Expr r = e;
    for (const auto& x : index) {
        r = total_derivative(r, x);
    }
    return r;
}

Expr JetSpace::promoted_total_derivative(const Expr& e, const std::string& x) const
{
    auto v = first_derivative_of(x);
    if (!promoted_ || !v) {
        return total_derivative(e, x);
    }
    return total_derivative(e, x) + Expr::jet(*v) * total_derivative(e, *promoted_);
}

Expr VectorField::xi_of(const std::string& x) const
{
    auto it = xi.find(x);
    return it == xi.end() ? Expr(0) : it->second;
}

Expr VectorField::eta_of(const std::string& u) const
{
    auto it = eta.find(u);
    return it == eta.end() ? Expr(0) : it->second;
}

VectorField operator+(const VectorField& a, const VectorField& b)
{
    VectorField r = a;
    for (const auto& [k, v] : b.xi) {
        r.xi[k] = r.xi_of(k) + v;
    }
    for (const auto& [k, v] : b.eta) {
        r.eta[k] = r.eta_of(k) + v;
    }
    return r;
}

VectorField operator*(const Expr& k, const VectorField& a)
{
    VectorField r;
    for (const auto& [n, v] : a.xi) {
        r.xi[n] = k * v;
    }
    for (const auto& [n, v] : a.eta) {
        r.eta[n] = k * v;
    }
    return r;
}

struct ProlongedField::Cache {
    std::mutex mutex;
    std::unordered_map<std::string, Expr> coefficients;
};

ProlongedField::ProlongedField(VectorField base, int order, JetSpace space)
    : base_(std::move(base)), order_(order), space_(std::move(space)), cache_(std::make_shared<Cache>())
{
}

Expr ProlongedField::coefficient(const JetCoord& c) const
{
    if (c.order() > order_) {
        throw InsufficientProlongationOrder("coordinate " + c.key() + " exceeds prolongation order " +
                                            std::to_string(order_));
    }
    if (c.order() == 0) {
        return base_.eta_of(c.dependent);
    }
    {
        std::lock_guard lock(cache_->mutex);
        if (auto it = cache_->coefficients.find(c.key()); it != cache_->coefficients.end()) {
            return it->second;
        }
    }
    // Peel the last index: c = J + e_i.
    JetCoord parent = c;
    const std::string xi = parent.index.back();
    parent.index.pop_back();
    std::vector<Expr> terms{space_.total_derivative(coefficient(parent), xi)};
    for (const auto& [xj, xi_j] : base_.xi) {
        const Expr d = space_.total_derivative(xi_j, xi);
        if (!d.is_zero()) {
            terms.push_back(-Expr::jet(parent.raised(xj)) * d);
        }
    }
    Expr result = make_sum(std::move(terms));
    std::lock_guard lock(cache_->mutex);
    return cache_->coefficients.emplace(c.key(), result).first->second;
}

ProlongedField prolong(const VectorField& vf, int order, const JetSpace& js)
{
    return ProlongedField(vf, order, js);
}

ProlongedField prolong(const CanonicalOperator& op, const JetSpace& js)
{
    VectorField vf;
    vf.eta = op.characteristic;
    return ProlongedField(std::move(vf), js.max_order(), js);
}

Expr apply_operator(const ProlongedField& pf, const Expr& e)
{
    std::vector<Expr> terms;
    for (const auto& [x, xi] : pf.base().xi) {
        terms.push_back(xi * diff(e, Expr::symbol(x)));
    }
    for (const auto& c : pf.space().jet_coordinates(e)) {
        const Expr d = diff(e, Expr::jet(c));
        if (!d.is_zero()) {
            terms.push_back(pf.coefficient(c) * d);
        }
    }
    return simplify(make_sum(std::move(terms)));
}

Expr apply_operator(const CanonicalOperator& op, const Expr& e, const JetSpace& js)
{
    return apply_operator(prolong(op, js), e);
}

} // namespace symred
