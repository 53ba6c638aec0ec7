#include "symred/expr.hpp"

#include "symred/error.hpp"

#include <algorithm>
#include <set>

namespace symred {

namespace {

std::size_t mix(std::size_t h, std::size_t v) noexcept
{
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::size_t hash_rational(const Rational& r)
{
    static const Integer modulus = 2305843009213693951; // 2^61 - 1
    Integer n = boost::multiprecision::numerator(r) % modulus;
    Integer d = boost::multiprecision::denominator(r) % modulus;
    return mix(static_cast<std::size_t>(static_cast<long long>(n)), static_cast<std::size_t>(static_cast<long long>(d)));
}

Rational rational_pow(const Rational& base, long long n)
{
    Rational result = 1;
    Rational b = n < 0 ? Rational(1) / base : base;
    unsigned long long e = n < 0 ? static_cast<unsigned long long>(-n) : static_cast<unsigned long long>(n);
    while (e != 0) {
        if (e & 1ULL) {
            result *= b;
        }
        b *= b;
        e >>= 1;
    }
    return result;
}

bool is_integer_value(const Rational& r)
{
    return boost::multiprecision::denominator(r) == 1;
}

std::optional<Integer> exact_sqrt(const Integer& v)
{
    if (v < 0) {
        return std::nullopt;
    }
    Integer s = boost::multiprecision::sqrt(v);
    if (s * s == v) {
        return s;
    }
    return std::nullopt;
}

// Integer powers of numbers beyond this stay symbolic.
constexpr int kMaxFoldedPower = 4096;

const Expr& zero_expr()
{
    static const Expr z{Rational(0)};
    return z;
}

const Expr& one_expr()
{
    static const Expr o{Rational(1)};
    return o;
}

int kind_rank(Kind k) { return static_cast<int>(k); }

/// Product node with coefficient `k` times an already normalized coefficient-free term.
Expr scaled(const Expr& rest, const Rational& k);

bool negative_leading(const Expr& a)
{
    switch (a.kind()) {
    case Kind::number:
        return a.value() < 0;
    case Kind::product:
        return a.value() < 0;
    case Kind::sum:
        return split_coefficient(a.args()[0]).first < 0;
    default:
        return false;
    }
}

} // namespace

std::string_view fn_name(Fn f)
{
    switch (f) {
    case Fn::sin: return "sin";
    case Fn::cos: return "cos";
    case Fn::tan: return "tan";
    case Fn::atan: return "arctan";
    case Fn::exp: return "exp";
    case Fn::ln: return "ln";
    case Fn::sqrt: return "sqrt";
    case Fn::abs: return "abs";
    }
    return "?";
}

std::optional<Fn> fn_from_name(std::string_view name)
{
    if (name == "sin") return Fn::sin;
    if (name == "cos") return Fn::cos;
    if (name == "tan") return Fn::tan;
    if (name == "arctan" || name == "atan") return Fn::atan;
    if (name == "exp") return Fn::exp;
    if (name == "ln" || name == "log") return Fn::ln;
    if (name == "sqrt") return Fn::sqrt;
    if (name == "abs") return Fn::abs;
    return std::nullopt;
}

// --- JetCoord --------------------------------------------------------------

JetCoord::JetCoord(std::string dep, std::vector<std::string> idx)
    : dependent(std::move(dep)), index(std::move(idx))
{
    std::sort(index.begin(), index.end());
}

JetCoord JetCoord::raised(const std::string& var) const
{
    JetCoord r = *this;
    r.index.insert(std::upper_bound(r.index.begin(), r.index.end(), var), var);
    return r;
}

std::optional<std::vector<std::string>> JetCoord::over(const JetCoord& base) const
{
    if (dependent != base.dependent || base.index.size() > index.size()) {
        return std::nullopt;
    }
    if (!std::includes(index.begin(), index.end(), base.index.begin(), base.index.end())) {
        return std::nullopt;
    }
    std::vector<std::string> rest;
    std::set_difference(index.begin(), index.end(), base.index.begin(), base.index.end(), std::back_inserter(rest));
    return rest;
}

std::string JetCoord::key() const
{
    if (index.empty()) {
        return dependent;
    }
    std::string k = dependent + "[";
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (i != 0) {
            k += ",";
        }
        k += index[i];
    }
    return k + "]";
}

// --- node construction -----------------------------------------------------

Expr make_node(detail::Node&& n)
{
    std::size_t h = static_cast<std::size_t>(n.kind) * 1315423911ULL;
    h = mix(h, static_cast<std::size_t>(n.fn));
    h = mix(h, static_cast<std::size_t>(n.deriv));
    if (n.kind == Kind::number || n.kind == Kind::product || n.kind == Kind::sum) {
        h = mix(h, hash_rational(n.value));
    }
    h = mix(h, std::hash<std::string>{}(n.name));
    for (const auto& s : n.index) {
        h = mix(h, std::hash<std::string>{}(s));
    }
    for (const auto& c : n.children) {
        h = mix(h, c.hash());
    }
    n.hash = h;
    return Expr(std::make_shared<const detail::Node>(std::move(n)));
}

Expr::Expr() : Expr(zero_expr()) {}

Expr::Expr(const Rational& v)
{
    detail::Node n;
    n.kind = Kind::number;
    n.value = v;
    *this = make_node(std::move(n));
}

Expr Expr::symbol(const std::string& name)
{
    detail::Node n;
    n.kind = Kind::symbol;
    n.name = name;
    n.key = name;
    return make_node(std::move(n));
}

Expr Expr::jet(JetCoord coord)
{
    detail::Node n;
    n.kind = Kind::jet;
    n.key = coord.key();
    n.name = std::move(coord.dependent);
    n.index = std::move(coord.index);
    return make_node(std::move(n));
}

Expr Expr::jet(const std::string& dependent, std::vector<std::string> index)
{
    return jet(JetCoord(dependent, std::move(index)));
}

Expr Expr::apply(const std::string& name, int deriv, const Expr& arg)
{
    detail::Node n;
    n.kind = Kind::apply;
    n.name = name;
    n.deriv = deriv;
    n.children = {arg};
    return make_node(std::move(n));
}

bool Expr::is_zero() const noexcept { return kind() == Kind::number && value() == 0; }
bool Expr::is_one() const noexcept { return kind() == Kind::number && value() == 1; }
bool Expr::is_integer() const noexcept { return kind() == Kind::number && is_integer_value(value()); }

JetCoord Expr::jet_coord() const
{
    JetCoord c;
    c.dependent = node_->name;
    c.index = node_->index;
    return c;
}

bool Expr::operator==(const Expr& other) const noexcept
{
    if (node_ == other.node_) {
        return true;
    }
    if (hash() != other.hash()) {
        return false;
    }
    return compare(*this, other) == 0;
}

// --- ordering --------------------------------------------------------------

namespace {

int cmp_children(std::span<const Expr> a, std::span<const Expr> b)
{
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (int c = compare(a[i], b[i]); c != 0) {
            return c;
        }
    }
    if (a.size() != b.size()) {
        return a.size() < b.size() ? -1 : 1;
    }
    return 0;
}

template <typename T>
int three_way(const T& a, const T& b)
{
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

} // namespace

int compare(const Expr& a, const Expr& b)
{
    if (a.node() == b.node()) {
        return 0;
    }
    if (a.kind() != b.kind()) {
        return kind_rank(a.kind()) < kind_rank(b.kind()) ? -1 : 1;
    }
    switch (a.kind()) {
    case Kind::number:
        return three_way(a.value(), b.value());
    case Kind::symbol:
        return three_way(a.name(), b.name());
    case Kind::jet: {
        if (int c = three_way(a.name(), b.name()); c != 0) return c;
        const auto& ia = a.node()->index;
        const auto& ib = b.node()->index;
        if (ia.size() != ib.size()) return ia.size() < ib.size() ? -1 : 1;
        return three_way(ia, ib);
    }
    case Kind::apply: {
        if (int c = three_way(a.name(), b.name()); c != 0) return c;
        if (int c = three_way(a.deriv_order(), b.deriv_order()); c != 0) return c;
        return compare(a.arg(), b.arg());
    }
    case Kind::function: {
        if (int c = three_way(static_cast<int>(a.fn()), static_cast<int>(b.fn())); c != 0) return c;
        return compare(a.arg(), b.arg());
    }
    case Kind::power: {
        if (int c = compare(a.base(), b.base()); c != 0) return c;
        return compare(a.exponent(), b.exponent());
    }
    case Kind::product:
    case Kind::sum: {
        if (int c = cmp_children(a.args(), b.args()); c != 0) return c;
        return three_way(a.value(), b.value());
    }
    }
    return 0;
}

// --- normalization ---------------------------------------------------------

std::pair<Rational, Expr> split_coefficient(const Expr& term)
{
    if (term.is_number()) {
        return {term.value(), one_expr()};
    }
    if (term.is(Kind::product)) {
        if (term.value() == 1) {
            return {Rational(1), term};
        }
        if (term.args().size() == 1) {
            return {term.value(), term.args()[0]};
        }
        detail::Node n;
        n.kind = Kind::product;
        n.value = 1;
        n.children.assign(term.args().begin(), term.args().end());
        return {term.value(), make_node(std::move(n))};
    }
    return {Rational(1), term};
}

std::pair<Expr, Expr> split_power(const Expr& factor)
{
    if (factor.is(Kind::power)) {
        return {factor.base(), factor.exponent()};
    }
    return {factor, one_expr()};
}

namespace {

Expr scaled(const Expr& rest, const Rational& k)
{
    if (k == 1) {
        return rest;
    }
    if (rest.is_number()) {
        return Expr(rest.value() * k);
    }
    detail::Node n;
    n.kind = Kind::product;
    n.value = k;
    if (rest.is(Kind::product)) {
        n.children.assign(rest.args().begin(), rest.args().end());
    } else {
        n.children = {rest};
    }
    return make_node(std::move(n));
}

} // namespace

Expr make_sum(std::vector<Expr> terms)
{
    Rational constant = 0;
    std::map<Expr, Rational, ExprLess> acc;

    auto add_term = [&](const Expr& t, auto&& self) -> void {
        switch (t.kind()) {
        case Kind::number:
            constant += t.value();
            return;
        case Kind::sum:
            constant += t.value();
            for (const auto& c : t.args()) {
                self(c, self);
            }
            return;
        default: {
            auto [k, rest] = split_coefficient(t);
            acc[rest] += k;
        }
        }
    };
    for (const auto& t : terms) {
        add_term(t, add_term);
    }

    std::vector<Expr> out;
    out.reserve(acc.size());
    for (const auto& [rest, k] : acc) {
        if (k != 0) {
            out.push_back(scaled(rest, k));
        }
    }
    if (out.empty()) {
        return Expr(constant);
    }
    if (out.size() == 1 && constant == 0) {
        return out.front();
    }
    detail::Node n;
    n.kind = Kind::sum;
    n.value = constant;
    n.children = std::move(out);
    return make_node(std::move(n));
}

namespace {

// Sums inside products are kept primitive: the first term has coefficient
// +1 or -1 and the content moves to the product coefficient.
Rational sum_content(const Expr& s)
{
    return boost::multiprecision::abs(split_coefficient(s.args().front()).first);
}

Expr primitive_sum(const Expr& s, const Rational& content)
{
    std::vector<Expr> terms;
    terms.reserve(s.args().size() + 1);
    for (const auto& t : s.args()) {
        auto [k, rest] = split_coefficient(t);
        terms.push_back(scaled(rest, k / content));
    }
    terms.emplace_back(s.value() / content);
    return make_sum(std::move(terms));
}

bool small_integer(const Expr& e)
{
    return e.is_integer() && boost::multiprecision::abs(e.value()) <= kMaxFoldedPower;
}

} // namespace

Expr make_product(std::vector<Expr> factors)
{
    Rational coeff = 1;
    std::map<Expr, std::vector<Expr>, ExprLess> groups;
    std::vector<Expr> exp_args;

    auto add_factor = [&](const Expr& f, auto&& self) -> void {
        switch (f.kind()) {
        case Kind::number:
            coeff *= f.value();
            return;
        case Kind::product:
            coeff *= f.value();
            for (const auto& c : f.args()) {
                self(c, self);
            }
            return;
        default:
            break;
        }
        if (f.is(Kind::function) && f.fn() == Fn::exp) {
            exp_args.push_back(f.arg());
            return;
        }
        auto [b, e] = split_power(f);
        if (b.is(Kind::sum) && small_integer(e)) {
            const Rational c = sum_content(b);
            if (c != 1) {
                coeff *= rational_pow(c, static_cast<long long>(boost::multiprecision::numerator(e.value())));
                b = primitive_sum(b, c);
            }
        }
        groups[b].push_back(e);
    };
    for (const auto& f : factors) {
        add_factor(f, add_factor);
    }
    if (coeff == 0) {
        return zero_expr();
    }
    if (!exp_args.empty()) {
        Expr e = make_function(Fn::exp, make_sum(std::move(exp_args)));
        if (e.is_number()) {
            coeff *= e.value();
        } else {
            groups[e].push_back(one_expr());
        }
    }

    std::vector<Expr> out;
    for (auto& [b, es] : groups) {
        Expr p = make_power(b, make_sum(std::move(es)));
        if (p.is_number()) {
            coeff *= p.value();
        } else if (p.is(Kind::product)) {
            coeff *= p.value();
            out.insert(out.end(), p.args().begin(), p.args().end());
        } else {
            out.push_back(std::move(p));
        }
    }
    if (coeff == 0) {
        return zero_expr();
    }
    if (out.empty()) {
        return Expr(coeff);
    }
    if (out.size() == 1) {
        if (coeff == 1) {
            return out.front();
        }
        if (out.front().is(Kind::sum)) {
            std::vector<Expr> terms;
            terms.reserve(out.front().args().size() + 1);
            for (const auto& t : out.front().args()) {
                auto [k, rest] = split_coefficient(t);
                terms.push_back(scaled(rest, k * coeff));
            }
            terms.emplace_back(out.front().value() * coeff);
            return make_sum(std::move(terms));
        }
    }
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) {
        if (int c = compare(split_power(a).first, split_power(b).first); c != 0) {
            return c < 0;
        }
        return compare(a, b) < 0;
    });
    detail::Node n;
    n.kind = Kind::product;
    n.value = coeff;
    n.children = std::move(out);
    return make_node(std::move(n));
}

Expr make_power(const Expr& base, const Expr& exponent)
{
    if (exponent.is_zero()) {
        return one_expr();
    }
    if (exponent.is_one()) {
        return base;
    }
    if (base.is_number()) {
        const Rational& b = base.value();
        if (b == 1) {
            return one_expr();
        }
        if (exponent.is_integer() && boost::multiprecision::abs(exponent.value()) <= kMaxFoldedPower) {
            const long long n = static_cast<long long>(boost::multiprecision::numerator(exponent.value()));
            if (b != 0 || n > 0) {
                return Expr(rational_pow(b, n));
            }
        } else if (exponent.is_number() && b == 0 && exponent.value() > 0) {
            return zero_expr();
        }
    } else if (exponent.is_integer()) {
        if (base.is(Kind::power)) {
            return make_power(base.base(), base.exponent() * exponent);
        }
        if (base.is(Kind::product) && boost::multiprecision::abs(exponent.value()) <= kMaxFoldedPower) {
            const long long n = static_cast<long long>(boost::multiprecision::numerator(exponent.value()));
            std::vector<Expr> fs;
            fs.emplace_back(rational_pow(base.value(), n));
            for (const auto& f : base.args()) {
                fs.push_back(make_power(f, exponent));
            }
            return make_product(std::move(fs));
        }
        if (base.is(Kind::function) && base.fn() == Fn::exp) {
            return make_function(Fn::exp, base.arg() * exponent);
        }
        if (base.is(Kind::sum) && small_integer(exponent)) {
            const Rational c = sum_content(base);
            if (c != 1) {
                const long long n = static_cast<long long>(boost::multiprecision::numerator(exponent.value()));
                return make_product({Expr(rational_pow(c, n)), make_power(primitive_sum(base, c), exponent)});
            }
        }
    }
    detail::Node n;
    n.kind = Kind::power;
    n.children = {base, exponent};
    return make_node(std::move(n));
}

Expr make_function(Fn f, const Expr& a)
{
    auto node = [&](const Expr& arg) {
        detail::Node n;
        n.kind = Kind::function;
        n.fn = f;
        n.children = {arg};
        return make_node(std::move(n));
    };
    switch (f) {
    case Fn::sin:
    case Fn::tan:
    case Fn::atan:
        if (a.is_zero()) return zero_expr();
        if (negative_leading(a)) return -node(-a);
        return node(a);
    case Fn::cos:
        if (a.is_zero()) return one_expr();
        if (negative_leading(a)) return node(-a);
        return node(a);
    case Fn::exp:
        if (a.is_zero()) return one_expr();
        return node(a);
    case Fn::ln:
        if (a.is_one()) return zero_expr();
        if (a.is(Kind::function) && a.fn() == Fn::exp) return a.arg();
        return node(a);
    case Fn::sqrt:
        if (a.is_number() && a.value() >= 0) {
            auto n = exact_sqrt(boost::multiprecision::numerator(a.value()));
            auto d = exact_sqrt(boost::multiprecision::denominator(a.value()));
            if (n && d) return Expr(Rational(*n, *d));
        }
        return node(a);
    case Fn::abs:
        if (a.is_number()) return Expr(a.value() < 0 ? Rational(-a.value()) : a.value());
        if (a.is(Kind::function) && (a.fn() == Fn::abs || a.fn() == Fn::exp || a.fn() == Fn::sqrt)) return a;
        if (negative_leading(a)) return node(-a);
        return node(a);
    }
    return node(a);
}

Expr operator+(const Expr& a, const Expr& b) { return make_sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return make_sum({a, make_product({Expr(-1), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return make_product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return make_product({a, make_power(b, Expr(-1))}); }
Expr operator-(const Expr& a) { return make_product({Expr(-1), a}); }
Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

Expr pow(const Expr& base, const Expr& exponent) { return make_power(base, exponent); }
Expr sin(const Expr& a) { return make_function(Fn::sin, a); }
Expr cos(const Expr& a) { return make_function(Fn::cos, a); }
Expr tan(const Expr& a) { return make_function(Fn::tan, a); }
Expr atan(const Expr& a) { return make_function(Fn::atan, a); }
Expr exp(const Expr& a) { return make_function(Fn::exp, a); }
Expr ln(const Expr& a) { return make_function(Fn::ln, a); }
Expr sqrt(const Expr& a) { return make_function(Fn::sqrt, a); }
Expr abs(const Expr& a) { return make_function(Fn::abs, a); }

Expr rebuild(const Expr& e, std::vector<Expr> children)
{
    switch (e.kind()) {
    case Kind::number:
    case Kind::symbol:
    case Kind::jet:
        return e;
    case Kind::apply:
        return Expr::apply(e.name(), e.deriv_order(), children.at(0));
    case Kind::function:
        return make_function(e.fn(), children.at(0));
    case Kind::power:
        return make_power(children.at(0), children.at(1));
    case Kind::product:
        children.emplace_back(e.value());
        return make_product(std::move(children));
    case Kind::sum:
        children.emplace_back(e.value());
        return make_sum(std::move(children));
    }
    return e;
}

Expr simplify(const Expr& e)
{
    if (e.args().empty()) {
        return e;
    }
    std::vector<Expr> ch;
    ch.reserve(e.args().size());
    for (const auto& c : e.args()) {
        ch.push_back(simplify(c));
    }
    return rebuild(e, std::move(ch));
}

// --- queries ---------------------------------------------------------------

bool contains_if(const Expr& e, const std::function<bool(const Expr&)>& pred)
{
    if (pred(e)) {
        return true;
    }
    for (const auto& c : e.args()) {
        if (contains_if(c, pred)) {
            return true;
        }
    }
    return false;
}

bool depends_on(const Expr& e, const std::string& key)
{
    if (e.is_variable()) {
        return e.key() == key;
    }
    for (const auto& c : e.args()) {
        if (depends_on(c, key)) {
            return true;
        }
    }
    return false;
}

bool depends_on(const Expr& e, const Expr& var) { return depends_on(e, var.key()); }

namespace {

void collect_variables(const Expr& e, std::set<Expr, ExprLess>& out)
{
    if (e.is_variable()) {
        out.insert(e);
        return;
    }
    for (const auto& c : e.args()) {
        collect_variables(c, out);
    }
}

void collect_functions(const Expr& e, std::set<std::string>& out)
{
    if (e.is(Kind::apply)) {
        out.insert(e.name());
    }
    for (const auto& c : e.args()) {
        collect_functions(c, out);
    }
}

} // namespace

std::vector<Expr> free_variables(const Expr& e)
{
    std::set<Expr, ExprLess> s;
    collect_variables(e, s);
    return {s.begin(), s.end()};
}

std::vector<std::string> function_names(const Expr& e)
{
    std::set<std::string> s;
    collect_functions(e, s);
    return {s.begin(), s.end()};
}

std::size_t node_count(const Expr& e)
{
    std::size_t n = 1;
    for (const auto& c : e.args()) {
        n += node_count(c);
    }
    return n;
}

// --- calculus --------------------------------------------------------------

Expr diff(const Expr& e, const Expr& var)
{
    const std::string& key = var.key();
    if (!depends_on(e, key)) {
        return zero_expr();
    }
    switch (e.kind()) {
    case Kind::number:
        return zero_expr();
    case Kind::symbol:
    case Kind::jet:
        return e.key() == key ? one_expr() : zero_expr();
    case Kind::sum: {
        std::vector<Expr> terms;
        for (const auto& t : e.args()) {
            terms.push_back(diff(t, var));
        }
        return make_sum(std::move(terms));
    }
    case Kind::product: {
        std::vector<Expr> terms;
        const auto fs = e.args();
        for (std::size_t i = 0; i < fs.size(); ++i) {
            Expr d = diff(fs[i], var);
            if (d.is_zero()) {
                continue;
            }
            std::vector<Expr> prod{Expr(e.value()), d};
            for (std::size_t j = 0; j < fs.size(); ++j) {
                if (j != i) {
                    prod.push_back(fs[j]);
                }
            }
            terms.push_back(make_product(std::move(prod)));
        }
        return make_sum(std::move(terms));
    }
    case Kind::power: {
        const Expr& b = e.base();
        const Expr& x = e.exponent();
        if (!depends_on(x, key)) {
            return x * make_power(b, x - 1) * diff(b, var);
        }
        return e * (diff(x, var) * ln(b) + x * diff(b, var) / b);
    }
    case Kind::function: {
        const Expr& a = e.arg();
        Expr da = diff(a, var);
        switch (e.fn()) {
        case Fn::sin: return cos(a) * da;
        case Fn::cos: return -sin(a) * da;
        case Fn::tan: return (1 + pow(tan(a), 2)) * da;
        case Fn::atan: return da / (1 + pow(a, 2));
        case Fn::exp: return e * da;
        case Fn::ln: return da / a;
        case Fn::sqrt: return da / (2 * e);
        case Fn::abs: return e / a * da;
        }
        return zero_expr();
    }
    case Kind::apply:
        return Expr::apply(e.name(), e.deriv_order() + 1, e.arg()) * diff(e.arg(), var);
    }
    return zero_expr();
}

Expr substitute(const Expr& e, const Substitution& rules)
{
    if (rules.empty()) {
        return e;
    }
    if (e.is_variable()) {
        auto it = rules.find(e.key());
        return it == rules.end() ? e : it->second;
    }
    if (e.args().empty()) {
        return e;
    }
    std::vector<Expr> ch;
    ch.reserve(e.args().size());
    bool changed = false;
    for (const auto& c : e.args()) {
        ch.push_back(substitute(c, rules));
        changed = changed || ch.back().node() != c.node();
    }
    return changed ? rebuild(e, std::move(ch)) : e;
}

Expr substitute_fixed_point(const Expr& e, const Substitution& rules, int cap)
{
    Expr cur = e;
    for (int i = 0; i < cap; ++i) {
        Expr next = substitute(cur, rules);
        if (next == cur) {
            return next;
        }
        cur = std::move(next);
    }
    throw IterationCapExceeded("substitution did not stabilize within " + std::to_string(cap) +
                               " passes (cyclic rule set?)");
}

Expr transform(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& f)
{
    Expr cur = e;
    if (!e.args().empty()) {
        std::vector<Expr> ch;
        ch.reserve(e.args().size());
        bool changed = false;
        for (const auto& c : e.args()) {
            ch.push_back(transform(c, f));
            changed = changed || ch.back().node() != c.node();
        }
        if (changed) {
            cur = rebuild(e, std::move(ch));
        }
    }
    if (auto r = f(cur)) {
        return *r;
    }
    return cur;
}

namespace {

Expr expand_product_pair(const Expr& a, const Expr& b)
{
    if (!a.is(Kind::sum) && !b.is(Kind::sum)) {
        return a * b;
    }
    auto terms_of = [](const Expr& x) {
        std::vector<Expr> t;
        if (x.is(Kind::sum)) {
            t.assign(x.args().begin(), x.args().end());
            if (x.value() != 0) {
                t.emplace_back(x.value());
            }
        } else {
            t.push_back(x);
        }
        return t;
    };
    std::vector<Expr> out;
    for (const auto& ta : terms_of(a)) {
        for (const auto& tb : terms_of(b)) {
            out.push_back(ta * tb);
        }
    }
    return make_sum(std::move(out));
}

} // namespace

Expr expand(const Expr& e)
{
    switch (e.kind()) {
    case Kind::number:
    case Kind::symbol:
    case Kind::jet:
        return e;
    case Kind::apply:
        return Expr::apply(e.name(), e.deriv_order(), expand(e.arg()));
    case Kind::function:
        return make_function(e.fn(), expand(e.arg()));
    case Kind::sum: {
        std::vector<Expr> ts;
        for (const auto& t : e.args()) {
            ts.push_back(expand(t));
        }
        ts.emplace_back(e.value());
        return make_sum(std::move(ts));
    }
    case Kind::product: {
        Expr acc{e.value()};
        for (const auto& f : e.args()) {
            acc = expand_product_pair(acc, expand(f));
        }
        return acc;
    }
    case Kind::power: {
        Expr b = expand(e.base());
        Expr p = make_power(b, e.exponent());
        if (p.is(Kind::power) && p.base().is(Kind::sum) && p.exponent().is_integer() && p.exponent().value() > 1 &&
            p.exponent().value() <= 64) {
            const long long n = static_cast<long long>(boost::multiprecision::numerator(p.exponent().value()));
            Expr acc = p.base();
            for (long long i = 1; i < n; ++i) {
                acc = expand_product_pair(acc, p.base());
            }
            return acc;
        }
        if (p.is(Kind::product)) {
            return expand(p);
        }
        return p;
    }
    }
    return e;
}

namespace {

/// Splits a normalized product into (numerator, denominator) by the sign of integer exponents.
std::pair<Expr, Expr> split_num_den(const Expr& e)
{
    std::vector<Expr> num;
    std::vector<Expr> den;
    auto place = [&](const Expr& f) {
        auto [b, x] = split_power(f);
        if (x.is_integer() && x.value() < 0) {
            den.push_back(make_power(b, -x));
        } else {
            num.push_back(f);
        }
    };
    if (e.is(Kind::product)) {
        num.emplace_back(Rational(boost::multiprecision::numerator(e.value())));
        den.emplace_back(Rational(boost::multiprecision::denominator(e.value())));
        for (const auto& f : e.args()) {
            place(f);
        }
    } else if (e.is_number()) {
        return {Expr(Rational(boost::multiprecision::numerator(e.value()))),
                Expr(Rational(boost::multiprecision::denominator(e.value())))};
    } else {
        place(e);
    }
    return {make_product(std::move(num)), make_product(std::move(den))};
}

/// Factor map of a monomial: coefficient and base -> numeric exponent.
struct Monomial {
    Rational coeff = 1;
    std::map<Expr, Rational, ExprLess> powers;
};

Monomial monomial_of(const Expr& e)
{
    Monomial m;
    auto place = [&](const Expr& f) {
        auto [b, x] = split_power(f);
        if (x.is_number()) {
            m.powers[b] += x.value();
        } else {
            m.powers[f] += 1;
        }
    };
    if (e.is_number()) {
        m.coeff = e.value();
    } else if (e.is(Kind::product)) {
        m.coeff = e.value();
        for (const auto& f : e.args()) {
            place(f);
        }
    } else {
        place(e);
    }
    return m;
}

Integer lcm_int(const Integer& a, const Integer& b)
{
    if (a == 0 || b == 0) {
        return a == 0 ? b : a;
    }
    return boost::multiprecision::abs(a / boost::multiprecision::gcd(a, b) * b);
}

} // namespace

std::pair<Expr, Expr> together(const Expr& e)
{
    switch (e.kind()) {
    case Kind::number:
        return split_num_den(e);
    case Kind::symbol:
    case Kind::jet:
    case Kind::apply:
    case Kind::function:
        return {e, one_expr()};
    case Kind::power: {
        if (!e.exponent().is_integer()) {
            return {e, one_expr()};
        }
        auto [n, d] = together(e.base());
        const Expr& x = e.exponent();
        if (x.value() > 0) {
            return {make_power(n, x), make_power(d, x)};
        }
        return {make_power(d, -x), make_power(n, -x)};
    }
    case Kind::product: {
        std::vector<Expr> q{Expr(e.value())};
        for (const auto& f : e.args()) {
            auto [n, d] = together(f);
            q.push_back(n);
            q.push_back(make_power(d, Expr(-1)));
        }
        return split_num_den(make_product(std::move(q)));
    }
    case Kind::sum: {
        std::vector<std::pair<Expr, Expr>> parts;
        for (const auto& t : e.args()) {
            parts.push_back(together(t));
        }
        if (e.value() != 0) {
            parts.push_back(split_num_den(Expr(e.value())));
        }
        Integer lcm_coeff = 1;
        std::map<Expr, Rational, ExprLess> lcm_pow;
        for (const auto& [n, d] : parts) {
            Monomial m = monomial_of(d);
            lcm_coeff = lcm_int(lcm_coeff, boost::multiprecision::numerator(m.coeff));
            for (const auto& [b, k] : m.powers) {
                auto it = lcm_pow.find(b);
                if (it == lcm_pow.end() || it->second < k) {
                    lcm_pow[b] = k;
                }
            }
        }
        std::vector<Expr> lf{Expr(Rational(lcm_coeff))};
        for (const auto& [b, k] : lcm_pow) {
            lf.push_back(make_power(b, Expr(k)));
        }
        Expr lcm = make_product(std::move(lf));
        std::vector<Expr> num;
        for (const auto& [n, d] : parts) {
            num.push_back(n * (lcm / d));
        }
        return {make_sum(std::move(num)), lcm};
    }
    }
    return {e, one_expr()};
}

std::pair<Expr, Expr> factor_common(const Expr& e)
{
    if (!e.is(Kind::sum) || e.value() != 0) {
        return {one_expr(), e};
    }
    std::optional<std::map<Expr, Rational, ExprLess>> common;
    for (const auto& t : e.args()) {
        Monomial m = monomial_of(t);
        if (!common) {
            common = m.powers;
            continue;
        }
        std::map<Expr, Rational, ExprLess> next;
        for (const auto& [b, k] : *common) {
            auto it = m.powers.find(b);
            if (it != m.powers.end()) {
                next[b] = std::min(k, it->second);
            }
        }
        common = std::move(next);
    }
    std::vector<Expr> cf;
    for (const auto& [b, k] : *common) {
        if (k > 0) {
            cf.push_back(make_power(b, Expr(k)));
        }
    }
    if (cf.empty()) {
        return {one_expr(), e};
    }
    Expr c = make_product(std::move(cf));
    std::vector<Expr> rest;
    for (const auto& t : e.args()) {
        rest.push_back(t / c);
    }
    return {c, make_sum(std::move(rest))};
}

} // namespace symred
