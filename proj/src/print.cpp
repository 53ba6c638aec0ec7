#include "symred/expr.hpp"
#include "symred/parser.hpp"

#include <ostream>

namespace symred {

namespace {

// Binding strength of the printed form.  A child whose level is below what
// the parent needs is parenthesized.
enum Level : int { sum_level = 1, product_level = 2, negation_level = 3, power_level = 4, atom_level = 5 };

struct Printed {
    std::string text;
    int level;
};

Printed print(const Expr& e);

std::string wrap(const Printed& p, int needed)
{
    return p.level < needed ? "(" + p.text + ")" : p.text;
}

std::string rational_text(const Rational& r)
{
    return r.str();
}

bool negative_integer_exponent(const Expr& f)
{
    return f.is(Kind::power) && f.exponent().is_integer() && f.exponent().value() < 0;
}

Printed print_power(const Expr& base, const Expr& exponent)
{
    std::string b = wrap(print(base), atom_level);
    std::string x;
    if (exponent.is_integer() && exponent.value() >= 0) {
        x = rational_text(exponent.value());
    } else {
        x = wrap(print(exponent), atom_level);
    }
    return {b + "^" + x, power_level};
}

Printed print_product(const Rational& coeff, std::span<const Expr> factors)
{
    const bool negative = coeff < 0;
    const Rational mag = negative ? Rational(-coeff) : coeff;
    const Integer p = boost::multiprecision::numerator(mag);
    const Integer q = boost::multiprecision::denominator(mag);

    std::vector<std::string> num;
    std::vector<std::string> den;
    if (p != 1) {
        num.push_back(p.str());
    }
    if (q != 1) {
        den.push_back(q.str());
    }
    for (const auto& f : factors) {
        if (negative_integer_exponent(f)) {
            const Expr inv = make_power(f.base(), -f.exponent());
            den.push_back(wrap(print(inv), power_level));
        } else {
            num.push_back(wrap(print(f), negation_level));
        }
    }
    std::string s;
    if (num.empty()) {
        s = "1";
    }
    for (std::size_t i = 0; i < num.size(); ++i) {
        s += (i == 0 ? "" : "*") + num[i];
    }
    for (const auto& d : den) {
        s += "/" + d;
    }
    if (negative) {
        return {"-" + s, product_level};
    }
    return {s, product_level};
}

Printed print(const Expr& e)
{
    switch (e.kind()) {
    case Kind::number: {
        const Rational& v = e.value();
        if (boost::multiprecision::denominator(v) != 1) {
            return {rational_text(v), product_level};
        }
        return {rational_text(v), v < 0 ? negation_level : atom_level};
    }
    case Kind::symbol:
        return {e.name(), atom_level};
    case Kind::jet:
        return {e.key(), atom_level};
    case Kind::apply:
        return {e.name() + std::string(static_cast<std::size_t>(e.deriv_order()), '\'') + "(" + print(e.arg()).text + ")",
                atom_level};
    case Kind::function:
        return {std::string(fn_name(e.fn())) + "(" + print(e.arg()).text + ")", atom_level};
    case Kind::power:
        if (negative_integer_exponent(e)) {
            return print_product(1, std::span<const Expr>(&e, 1));
        }
        return print_power(e.base(), e.exponent());
    case Kind::product:
        return print_product(e.value(), e.args());
    case Kind::sum: {
        std::string s;
        bool first = true;
        auto emit = [&](const Expr& term) {
            auto [k, rest] = split_coefficient(term);
            if (!first && k < 0) {
                s += " - " + print(-term).text;
            } else {
                s += (first ? "" : " + ") + print(term).text;
            }
            first = false;
        };
        // positive terms first so "exp(u) - C" reads naturally
        for (const auto& t : e.args()) {
            if (split_coefficient(t).first > 0) {
                emit(t);
            }
        }
        if (e.value() > 0) {
            emit(Expr(e.value()));
        }
        for (const auto& t : e.args()) {
            if (split_coefficient(t).first < 0) {
                emit(t);
            }
        }
        if (e.value() < 0) {
            emit(Expr(e.value()));
        }
        return {s, sum_level};
    }
    }
    return {"?", atom_level};
}

} // namespace

std::string print_expression(const Expr& e)
{
    return print(e).text;
}

std::string_view relation_symbol(Relation r)
{
    switch (r) {
    case Relation::lt: return "<";
    case Relation::le: return "<=";
    case Relation::gt: return ">";
    case Relation::ge: return ">=";
    case Relation::ne: return "!=";
    }
    return "?";
}

std::string print_constraint(const DomainConstraint& c)
{
    return print_expression(c.lhs) + " " + std::string(relation_symbol(c.relation)) + " " + print_expression(c.rhs);
}

std::ostream& operator<<(std::ostream& os, const Expr& e)
{
    return os << print_expression(e);
}

} // namespace symred
