#pragma once

// Text grammar for expressions, equations and domain constraints.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?              right associative
//   primary := number | name | name '[' vars ']' | name '\''* '(' expr ')' | '(' expr ')'
//
// u[x1,x2] is a jet coordinate (the multi-index is order-insensitive),
// F'(s) the first derivative of the opaque function F.

#include "symred/expr.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace symred {

enum class SymbolRole { independent, dependent, parameter, function };

/// Symbols visible to the parser.  Dependents carry the variables they may be
/// differentiated by.
class ParseContext {
public:
    void add_independent(const std::string& name);
    void add_dependent(const std::string& name, std::vector<std::string> over);
    void add_parameter(const std::string& name);
    void add_function(const std::string& name);

    std::optional<SymbolRole> role(const std::string& name) const;
    const std::vector<std::string>& independents() const noexcept { return independents_; }
    const std::vector<std::string>& derivative_vars(const std::string& dependent) const;
    const std::map<std::string, std::vector<std::string>>& dependents() const noexcept { return dependents_; }
    const std::set<std::string>& parameters() const noexcept { return parameters_; }
    const std::set<std::string>& functions() const noexcept { return functions_; }

private:
    void check_fresh(const std::string& name) const;

    std::vector<std::string> independents_;
    std::map<std::string, std::vector<std::string>> dependents_;
    std::set<std::string> parameters_;
    std::set<std::string> functions_;
};

/// Position of a parsed fragment inside a larger document, for error reports.
struct SourcePos {
    int line = 1;
    int column = 1;
};

Expr parse_expression(std::string_view text, const ParseContext& ctx, SourcePos origin = {});

/// "lhs = rhs"
std::pair<Expr, Expr> parse_equation(std::string_view text, const ParseContext& ctx, SourcePos origin = {});

enum class Relation { lt, le, gt, ge, ne };

/// lhs REL rhs; evaluated by the zero tester and samplers.
struct DomainConstraint {
    Expr lhs;
    Relation relation = Relation::ne;
    Expr rhs;
};

DomainConstraint parse_constraint(std::string_view text, const ParseContext& ctx, SourcePos origin = {});

std::string print_expression(const Expr& e);
std::string print_constraint(const DomainConstraint& c);
std::string_view relation_symbol(Relation r);

} // namespace symred
