#pragma once

#include "symred/expr.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace symred {

/// Concrete stand-in for an opaque function symbol.  The body is a template
/// in the placeholder variable `var`; derivatives are taken symbolically.
/// For antiderivatives the body is the integrand (the first derivative) and
/// `value` computes the function itself.
class FunctionInstance {
public:
    static FunctionInstance from_body(Expr body, std::string var);
    static FunctionInstance antiderivative(Expr integrand, std::string var, std::function<double(double)> value);

    /// Template of the n-th derivative, or nullopt when it has no closed form (n = 0 of an antiderivative).
    std::optional<Expr> derivative(int n) const;
    const std::string& var() const noexcept { return var_; }
    const std::function<double(double)>& value_fn() const noexcept { return value_; }

private:
    struct Cache;
    std::string var_;
    int body_order_ = 0;
    std::shared_ptr<Cache> cache_;
    std::function<double(double)> value_;
};

/// Numeric values for parameters plus concrete instances of opaque functions.
struct ParameterBinding {
    std::map<std::string, double> values;
    std::map<std::string, FunctionInstance> functions;
};

using Point = std::map<std::string, double>;

/// IEEE double evaluation.  Throws UnboundSymbol, or DomainFault for ln of a
/// non-positive value, sqrt of a negative value, division by zero and any
/// non-finite intermediate.
double eval_numeric(const Expr& e, const Point& point, const ParameterBinding& binding = {});

/// Reusable evaluator.  Also tracks the largest magnitude of any evaluated
/// subterm, which the zero tester uses as its relative scale.
class Evaluator {
public:
    explicit Evaluator(const ParameterBinding* binding = nullptr) : binding_(binding) {}

    void set(const std::string& key, double v) { values_[key] = v; }
    void set(const Point& p);
    void clear() { values_.clear(); }
    const std::unordered_map<std::string, double>& values() const noexcept { return values_; }

    double operator()(const Expr& e);

    double max_magnitude() const noexcept { return max_magnitude_; }
    void reset_magnitude() noexcept { max_magnitude_ = 0.0; }

private:
    double eval(const Expr& e);
    double lookup(const std::string& key) const;
    double apply(const Expr& e);
    double checked(double v, const Expr& e);

    const ParameterBinding* binding_;
    std::unordered_map<std::string, double> values_;
    double max_magnitude_ = 0.0;
};

} // namespace symred
