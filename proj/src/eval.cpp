#include "symred/eval.hpp"

#include "symred/error.hpp"
#include "symred/parser.hpp"

#include <cmath>
#include <mutex>

namespace symred {

struct FunctionInstance::Cache {
    std::mutex mutex;
    std::vector<Expr> templates; // templates[i] = body differentiated i times
};

FunctionInstance FunctionInstance::from_body(Expr body, std::string var)
{
    FunctionInstance f;
    f.var_ = std::move(var);
    f.body_order_ = 0;
    f.cache_ = std::make_shared<Cache>();
    f.cache_->templates.push_back(std::move(body));
    return f;
}

FunctionInstance FunctionInstance::antiderivative(Expr integrand, std::string var, std::function<double(double)> value)
{
    FunctionInstance f;
    f.var_ = std::move(var);
    f.body_order_ = 1;
    f.cache_ = std::make_shared<Cache>();
    f.cache_->templates.push_back(std::move(integrand));
    f.value_ = std::move(value);
    return f;
}

std::optional<Expr> FunctionInstance::derivative(int n) const
{
    if (n < body_order_ || !cache_) {
        return std::nullopt;
    }
    const std::size_t want = static_cast<std::size_t>(n - body_order_);
    std::lock_guard lock(cache_->mutex);
    const Expr x = Expr::symbol(var_);
    while (cache_->templates.size() <= want) {
        cache_->templates.push_back(diff(cache_->templates.back(), x));
    }
    return cache_->templates[want];
}

void Evaluator::set(const Point& p)
{
    for (const auto& [k, v] : p) {
        values_[k] = v;
    }
}

double Evaluator::operator()(const Expr& e)
{
    return eval(e);
}

double Evaluator::lookup(const std::string& key) const
{
    if (auto it = values_.find(key); it != values_.end()) {
        return it->second;
    }
    if (binding_ != nullptr) {
        if (auto it = binding_->values.find(key); it != binding_->values.end()) {
            return it->second;
        }
    }
    throw UnboundSymbol(key);
}

double Evaluator::checked(double v, const Expr& e)
{
    if (!std::isfinite(v)) {
        throw DomainFault("non-finite value in " + print_expression(e));
    }
    max_magnitude_ = std::max(max_magnitude_, std::fabs(v));
    return v;
}

double Evaluator::apply(const Expr& e)
{
    const FunctionInstance* inst = nullptr;
    if (binding_ != nullptr) {
        if (auto it = binding_->functions.find(e.name()); it != binding_->functions.end()) {
            inst = &it->second;
        }
    }
    if (inst == nullptr) {
        throw UnboundSymbol(e.name());
    }
    const double s = eval(e.arg());
    auto body = inst->derivative(e.deriv_order());
    if (!body) {
        if (!inst->value_fn()) {
            throw UnboundSymbol(e.name());
        }
        return inst->value_fn()(s);
    }
    auto it = values_.find(inst->var());
    const bool had = it != values_.end();
    const double saved = had ? it->second : 0.0;
    values_[inst->var()] = s;
    double v = 0.0;
    try {
        v = eval(*body);
    } catch (...) {
        if (had) values_[inst->var()] = saved; else values_.erase(inst->var());
        throw;
    }
    if (had) values_[inst->var()] = saved; else values_.erase(inst->var());
    return v;
}

double Evaluator::eval(const Expr& e)
{
    switch (e.kind()) {
    case Kind::number:
        return checked(static_cast<double>(e.value()), e);
    case Kind::symbol:
    case Kind::jet:
        return checked(lookup(e.key()), e);
    case Kind::apply:
        return checked(apply(e), e);
    case Kind::sum: {
        double s = static_cast<double>(e.value());
        for (const auto& t : e.args()) {
            s += eval(t);
        }
        return checked(s, e);
    }
    case Kind::product: {
        double p = static_cast<double>(e.value());
        for (const auto& f : e.args()) {
            p *= eval(f);
        }
        return checked(p, e);
    }
    case Kind::power: {
        const double b = eval(e.base());
        if (e.exponent().is_integer()) {
            const double n = static_cast<double>(e.exponent().value());
            if (b == 0.0 && n < 0) {
                throw DomainFault("division by zero in " + print_expression(e));
            }
            return checked(std::pow(b, n), e);
        }
        const double x = eval(e.exponent());
        if (b < 0.0) {
            throw DomainFault("negative base with non-integer exponent in " + print_expression(e));
        }
        if (b == 0.0 && x <= 0.0) {
            throw DomainFault("division by zero in " + print_expression(e));
        }
        return checked(std::pow(b, x), e);
    }
    case Kind::function: {
        const double a = eval(e.arg());
        switch (e.fn()) {
        case Fn::sin: return checked(std::sin(a), e);
        case Fn::cos: return checked(std::cos(a), e);
        case Fn::tan: return checked(std::tan(a), e);
        case Fn::atan: return checked(std::atan(a), e);
        case Fn::exp: return checked(std::exp(a), e);
        case Fn::ln:
            if (a <= 0.0) {
                throw DomainFault("ln of non-positive value in " + print_expression(e));
            }
            return checked(std::log(a), e);
        case Fn::sqrt:
            if (a < 0.0) {
                throw DomainFault("sqrt of negative value in " + print_expression(e));
            }
            return checked(std::sqrt(a), e);
        case Fn::abs: return checked(std::fabs(a), e);
        }
        break;
    }
    }
    throw DomainFault("unevaluable node");
}

double eval_numeric(const Expr& e, const Point& point, const ParameterBinding& binding)
{
    Evaluator ev(&binding);
    ev.set(point);
    return ev(e);
}

} // namespace symred
