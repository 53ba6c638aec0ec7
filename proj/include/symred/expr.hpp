#pragma once

// Immutable symbolic expressions over independent variables, parameters, jet
// coordinates and opaque unary function symbols.
//
// Every Expr is kept in normal form: the smart constructors below flatten and
// sort sums and products, fold numeric constants into a single rational
// coefficient, merge powers of equal bases and never produce x^0 or a
// one-factor product.  Nodes are shared and never mutated after
// construction, so Expr values are cheap to copy and safe to share between
// threads.

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace symred {

using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

enum class Fn : std::uint8_t { sin, cos, tan, atan, exp, ln, sqrt, abs };

std::string_view fn_name(Fn f);
std::optional<Fn> fn_from_name(std::string_view name);

/// Derivative coordinate u_J of a dependent variable.  The multi-index is
/// stored as a sorted multiset of independent-variable names, so u[x1,x2]
/// and u[x2,x1] are the same coordinate.  Order 0 is the dependent itself.
struct JetCoord {
    std::string dependent;
    std::vector<std::string> index;

    JetCoord() = default;
    explicit JetCoord(std::string dep, std::vector<std::string> idx = {});

    int order() const noexcept { return static_cast<int>(index.size()); }
    JetCoord raised(const std::string& var) const;
    /// Multi-index that has to be added to `base` to reach this coordinate,
    /// or nullopt when this is not a derivative of `base`.
    std::optional<std::vector<std::string>> over(const JetCoord& base) const;
    std::string key() const;

    auto operator<=>(const JetCoord&) const = default;
};

enum class Kind : std::uint8_t { number, symbol, jet, apply, function, power, product, sum };

namespace detail {
struct Node;
}

class Expr {
public:
    Expr();
    template <std::integral T>
    Expr(T v) : Expr(Rational(static_cast<long long>(v))) {}
    Expr(const Rational& v);

    static Expr symbol(const std::string& name);
    static Expr jet(JetCoord coord);
    static Expr jet(const std::string& dependent, std::vector<std::string> index = {});
    /// Opaque function `name` differentiated `deriv` times, applied to `arg`.
    static Expr apply(const std::string& name, int deriv, const Expr& arg);

    Kind kind() const noexcept;
    bool is(Kind k) const noexcept { return kind() == k; }
    bool is_number() const noexcept { return kind() == Kind::number; }
    bool is_zero() const noexcept;
    bool is_one() const noexcept;
    bool is_integer() const noexcept;
    /// Symbol or jet coordinate.
    bool is_variable() const noexcept { return kind() == Kind::symbol || kind() == Kind::jet; }

    /// Number value, product coefficient, or sum constant term.
    const Rational& value() const noexcept;
    /// Symbol name, jet dependent name, or opaque function name.
    const std::string& name() const noexcept;
    /// Evaluation key shared by symbols and jet coordinates.
    const std::string& key() const noexcept;
    JetCoord jet_coord() const;
    int deriv_order() const noexcept;
    Fn fn() const noexcept;
    std::span<const Expr> args() const noexcept;
    const Expr& arg() const noexcept { return args()[0]; }
    const Expr& base() const noexcept { return args()[0]; }
    const Expr& exponent() const noexcept { return args()[1]; }

    std::size_t hash() const noexcept;
    const detail::Node* node() const noexcept { return node_.get(); }

    bool operator==(const Expr& other) const noexcept;

private:
    explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const detail::Node> node_;

    friend Expr make_node(detail::Node&& n);
};

/// Total structural order used to sort sums and products.
int compare(const Expr& a, const Expr& b);

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

struct ExprHash {
    std::size_t operator()(const Expr& e) const noexcept { return e.hash(); }
};

// Smart constructors.  All of them return normalized expressions.
Expr make_sum(std::vector<Expr> terms);
Expr make_product(std::vector<Expr> factors);
Expr make_power(const Expr& base, const Expr& exponent);
Expr make_function(Fn f, const Expr& arg);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);

Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr atan(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr sqrt(const Expr& a);
Expr abs(const Expr& a);

/// Rebuilds `e` with new children through the smart constructors.
Expr rebuild(const Expr& e, std::vector<Expr> children);

/// Bottom-up renormalization.  Idempotent.
Expr simplify(const Expr& e);

/// Numeric coefficient and the remaining term: 3*x*y -> (3, x*y).
std::pair<Rational, Expr> split_coefficient(const Expr& term);

/// Base and exponent of a factor: x^2 -> (x, 2), x -> (x, 1).
std::pair<Expr, Expr> split_power(const Expr& factor);

// Structural queries.

bool depends_on(const Expr& e, const std::string& key);
bool depends_on(const Expr& e, const Expr& var);
bool contains_if(const Expr& e, const std::function<bool(const Expr&)>& pred);
/// Symbols and jet coordinates occurring in `e`, sorted and unique.
std::vector<Expr> free_variables(const Expr& e);
/// Names of opaque functions occurring in `e`.
std::vector<std::string> function_names(const Expr& e);
std::size_t node_count(const Expr& e);

// Calculus and rewriting.

/// Partial derivative treating every symbol and jet coordinate as independent.
Expr diff(const Expr& e, const Expr& var);

using Substitution = std::unordered_map<std::string, Expr>;

/// Simultaneous substitution keyed by variable key.
Expr substitute(const Expr& e, const Substitution& rules);

/// Re-applies `rules` until nothing changes; throws IterationCapExceeded.
Expr substitute_fixed_point(const Expr& e, const Substitution& rules, int cap = 32);

/// Bottom-up rewrite: `f` is offered each rebuilt node and may return a replacement.
Expr transform(const Expr& e, const std::function<std::optional<Expr>(const Expr&)>& f);

/// Distributes products over sums and integer powers of sums.
Expr expand(const Expr& e);

/// Numerator and denominator over a common denominator.
std::pair<Expr, Expr> together(const Expr& e);

/// Pulls the factors shared by every term of a sum out in front.
std::pair<Expr, Expr> factor_common(const Expr& e);

std::ostream& operator<<(std::ostream& os, const Expr& e);

// ---------------------------------------------------------------------------

namespace detail {

struct Node {
    Kind kind = Kind::number;
    Fn fn = Fn::sin;
    int deriv = 0;
    Rational value;
    std::string name;
    std::vector<std::string> index;
    std::string key;
    std::vector<Expr> children;
    std::size_t hash = 0;
};

} // namespace detail

inline Kind Expr::kind() const noexcept { return node_->kind; }
inline const Rational& Expr::value() const noexcept { return node_->value; }
inline const std::string& Expr::name() const noexcept { return node_->name; }
inline const std::string& Expr::key() const noexcept { return node_->key; }
inline int Expr::deriv_order() const noexcept { return node_->deriv; }
inline Fn Expr::fn() const noexcept { return node_->fn; }
inline std::span<const Expr> Expr::args() const noexcept { return node_->children; }
inline std::size_t Expr::hash() const noexcept { return node_->hash; }

} // namespace symred
