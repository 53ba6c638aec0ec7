#include "symred/parser.hpp"

#include "symred/error.hpp"

#include <algorithm>
#include <cctype>

namespace symred {

// --- ParseContext ----------------------------------------------------------

void ParseContext::check_fresh(const std::string& name) const
{
    if (role(name)) {
        throw DuplicateName(name);
    }
}

void ParseContext::add_independent(const std::string& name)
{
    check_fresh(name);
    independents_.push_back(name);
}

void ParseContext::add_dependent(const std::string& name, std::vector<std::string> over)
{
    check_fresh(name);
    dependents_.emplace(name, std::move(over));
}

void ParseContext::add_parameter(const std::string& name)
{
    check_fresh(name);
    parameters_.insert(name);
}

void ParseContext::add_function(const std::string& name)
{
    check_fresh(name);
    functions_.insert(name);
}

std::optional<SymbolRole> ParseContext::role(const std::string& name) const
{
    if (std::find(independents_.begin(), independents_.end(), name) != independents_.end()) {
        return SymbolRole::independent;
    }
    if (dependents_.count(name) != 0) {
        return SymbolRole::dependent;
    }
    if (parameters_.count(name) != 0) {
        return SymbolRole::parameter;
    }
    if (functions_.count(name) != 0) {
        return SymbolRole::function;
    }
    return std::nullopt;
}

const std::vector<std::string>& ParseContext::derivative_vars(const std::string& dependent) const
{
    static const std::vector<std::string> none;
    auto it = dependents_.find(dependent);
    return it == dependents_.end() ? none : it->second;
}

// --- recursive descent -----------------------------------------------------

namespace {

constexpr int kMaxDepth = 200;
constexpr int kMaxDecimalExponent = 400;

class Parser {
public:
    Parser(std::string_view text, const ParseContext& ctx, SourcePos origin)
        : text_(text), ctx_(ctx), origin_(origin) {}

    Expr parse_all()
    {
        Expr e = expression();
        skip_space();
        if (!at_end()) {
            fail("unexpected '" + std::string(1, peek()) + "'");
        }
        return e;
    }

    Expr expression()
    {
        Guard g(*this);
        std::vector<Expr> terms{term()};
        for (;;) {
            skip_space();
            if (accept('+')) {
                terms.push_back(term());
            } else if (accept('-')) {
                terms.push_back(-term());
            } else {
                break;
            }
        }
        return make_sum(std::move(terms));
    }

private:
    struct Guard {
        explicit Guard(Parser& p) : p_(p)
        {
            if (++p_.depth_ > kMaxDepth) {
                p_.fail("expression nested too deeply");
            }
        }
        ~Guard() { --p_.depth_; }
        Parser& p_;
    };

    Expr term()
    {
        Expr acc = unary();
        for (;;) {
            skip_space();
            if (accept('*')) {
                acc = acc * unary();
            } else if (peek() == '/' ) {
                ++pos_;
                Expr d = unary();
                acc = acc / d;
            } else {
                return acc;
            }
        }
    }

    Expr unary()
    {
        Guard g(*this);
        skip_space();
        if (accept('-')) {
            return -unary();
        }
        if (accept('+')) {
            return unary();
        }
        return power();
    }

    Expr power()
    {
        Expr b = primary();
        skip_space();
        if (accept('^')) {
            return pow(b, unary());
        }
        return b;
    }

    Expr primary()
    {
        skip_space();
        if (at_end()) {
            fail("unexpected end of input");
        }
        const char c = peek();
        if (c == '(') {
            ++pos_;
            Expr e = expression();
            skip_space();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return named();
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expr number()
    {
        const std::size_t start = pos_;
        Integer mantissa = 0;
        int scale = 0;
        bool any_digit = false;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
            mantissa = mantissa * 10 + (peek() - '0');
            any_digit = true;
            ++pos_;
        }
        if (!at_end() && peek() == '.') {
            ++pos_;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                mantissa = mantissa * 10 + (peek() - '0');
                --scale;
                any_digit = true;
                ++pos_;
            }
        }
        if (!any_digit) {
            pos_ = start;
            fail("malformed number");
        }
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            const std::size_t save = pos_;
            ++pos_;
            int sign = 1;
            if (!at_end() && (peek() == '+' || peek() == '-')) {
                sign = peek() == '-' ? -1 : 1;
                ++pos_;
            }
            if (at_end() || !std::isdigit(static_cast<unsigned char>(peek()))) {
                pos_ = save;
            } else {
                int e = 0;
                while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                    e = e * 10 + (peek() - '0');
                    if (e > kMaxDecimalExponent) {
                        fail("exponent too large");
                    }
                    ++pos_;
                }
                scale += sign * e;
            }
        }
        if (std::abs(scale) > kMaxDecimalExponent) {
            fail("number out of range");
        }
        Integer ten = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(std::abs(scale)));
        if (scale >= 0) {
            return Expr(Rational(mantissa * ten));
        }
        return Expr(Rational(mantissa, ten));
    }

    std::string identifier()
    {
        const std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    Expr named()
    {
        const std::size_t start = pos_;
        const std::string name = identifier();
        int primes = 0;
        while (!at_end() && peek() == '\'') {
            ++primes;
            ++pos_;
        }
        skip_space();
        if (!at_end() && peek() == '(') {
            ++pos_;
            Expr arg = expression();
            skip_space();
            expect(')');
            if (auto f = fn_from_name(name); f && primes == 0 && ctx_.role(name) != SymbolRole::function) {
                return make_function(*f, arg);
            }
            if (ctx_.role(name) == SymbolRole::function) {
                return Expr::apply(name, primes, arg);
            }
            pos_ = start;
            throw_undeclared(name);
        }
        if (primes != 0) {
            fail("'" + name + "' with primes must be applied to an argument");
        }
        auto r = ctx_.role(name);
        if (!r) {
            pos_ = start;
            throw_undeclared(name);
        }
        if (!at_end() && peek() == '[') {
            if (*r != SymbolRole::dependent) {
                fail("'" + name + "' is not a dependent variable");
            }
            ++pos_;
            std::vector<std::string> idx;
            const auto& allowed = ctx_.derivative_vars(name);
            for (;;) {
                skip_space();
                if (at_end() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) {
                    fail("expected variable name in derivative index");
                }
                std::string v = identifier();
                if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                    fail("'" + name + "' cannot be differentiated by '" + v + "'");
                }
                idx.push_back(std::move(v));
                skip_space();
                if (accept(',')) {
                    continue;
                }
                expect(']');
                break;
            }
            return Expr::jet(name, std::move(idx));
        }
        switch (*r) {
        case SymbolRole::dependent:
            return Expr::jet(name);
        case SymbolRole::function:
            fail("function '" + name + "' used without argument");
        default:
            return Expr::symbol(name);
        }
    }

    [[noreturn]] void throw_undeclared(const std::string& name)
    {
        (void)name;
        throw UndeclaredSymbol(name);
    }

    void skip_space()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) {
            ++pos_;
        }
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    bool accept(char c)
    {
        if (!at_end() && peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        int line = origin_.line;
        int col = origin_.column;
        for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SyntaxError(msg, line, col);
    }

    std::string_view text_;
    const ParseContext& ctx_;
    SourcePos origin_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

/// Position of the first top-level occurrence of any of `ops`, skipping parentheses.
std::optional<std::pair<std::size_t, std::string_view>> find_top_level(std::string_view text,
                                                                       std::initializer_list<std::string_view> ops)
{
    int depth = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '(' || c == '[') {
            ++depth;
        } else if (c == ')' || c == ']') {
            --depth;
        } else if (depth == 0) {
            for (auto op : ops) {
                if (text.substr(i, op.size()) == op) {
                    return std::make_pair(i, op);
                }
            }
        }
    }
    return std::nullopt;
}

SourcePos advance(SourcePos p, std::string_view text, std::size_t n)
{
    for (std::size_t i = 0; i < n && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

} // namespace

Expr parse_expression(std::string_view text, const ParseContext& ctx, SourcePos origin)
{
    return Parser(text, ctx, origin).parse_all();
}

std::pair<Expr, Expr> parse_equation(std::string_view text, const ParseContext& ctx, SourcePos origin)
{
    auto eq = find_top_level(text, {"="});
    if (!eq) {
        throw SyntaxError("expected '=' in equation", origin.line, origin.column);
    }
    const std::size_t at = eq->first;
    Expr lhs = parse_expression(text.substr(0, at), ctx, origin);
    Expr rhs = parse_expression(text.substr(at + 1), ctx, advance(origin, text, at + 1));
    return {lhs, rhs};
}

DomainConstraint parse_constraint(std::string_view text, const ParseContext& ctx, SourcePos origin)
{
    // Two-character operators first so "<=" is not read as "<".
    auto op = find_top_level(text, {"<=", ">=", "!=", "<", ">"});
    if (!op) {
        throw SyntaxError("expected a relation (<, <=, >, >=, !=)", origin.line, origin.column);
    }
    const auto [at, sym] = *op;
    DomainConstraint c;
    if (sym == "<=") c.relation = Relation::le;
    else if (sym == ">=") c.relation = Relation::ge;
    else if (sym == "!=") c.relation = Relation::ne;
    else if (sym == "<") c.relation = Relation::lt;
    else c.relation = Relation::gt;
    c.lhs = parse_expression(text.substr(0, at), ctx, origin);
    c.rhs = parse_expression(text.substr(at + sym.size()), ctx, advance(origin, text, at + sym.size()));
    return c;
}

} // namespace symred
