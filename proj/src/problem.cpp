#include "symred/problem.hpp"

#include "symred/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace symred {

std::string_view expectation_name(Expectation e)
{
    return e == Expectation::pass ? "pass" : "fail";
}

std::string_view mode_name(CheckMode m)
{
    switch (m) {
    case CheckMode::classical: return "classical";
    case CheckMode::conditional: return "conditional";
    case CheckMode::lie_backlund: return "lb";
    }
    return "classical";
}

std::optional<CheckMode> mode_from_name(std::string_view s)
{
    if (s == "classical") return CheckMode::classical;
    if (s == "conditional") return CheckMode::conditional;
    if (s == "lb") return CheckMode::lie_backlund;
    return std::nullopt;
}

namespace {

struct Line {
    int number = 0;
    std::string key;
    std::string value;
    int column = 1; // of the value
};

struct Section {
    std::string kind;
    std::string name;
    int line = 0;
    std::vector<Line> lines;
};

[[noreturn]] void malformed(int line, const std::string& msg)
{
    throw MalformedSection("line " + std::to_string(line) + ": " + msg);
}

std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

const std::set<std::string>& section_kinds()
{
    static const std::set<std::string> kinds{"space",  "params",   "equation", "operator",      "ansatz",
                                             "reduced", "solution", "backlund", "overdetermined"};
    return kinds;
}

std::vector<Section> split_sections(std::string_view text)
{
    std::vector<Section> out;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string raw(text.substr(pos, end - pos));
        pos = end + 1;
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') malformed(number, "unterminated section header");
            std::istringstream words(line.substr(1, line.size() - 2));
            Section s;
            s.line = number;
            words >> s.kind >> s.name;
            std::string extra;
            if (words >> extra) malformed(number, "section header has more than a kind and a name");
            if (section_kinds().count(s.kind) == 0) malformed(number, "unknown section kind '" + s.kind + "'");
            const bool named = s.kind != "space" && s.kind != "params";
            if (named && s.name.empty()) malformed(number, "[" + s.kind + "] needs a name");
            if (s.kind == "params" && !s.name.empty()) malformed(number, "[params] takes no name");
            out.push_back(std::move(s));
        } else {
            if (out.empty()) malformed(number, "content before the first section");
            std::size_t k = 0;
            while (k < line.size() && (std::isalnum(static_cast<unsigned char>(line[k])) || line[k] == '_' || line[k] == '.')) ++k;
            std::size_t eq = k;
            while (eq < line.size() && line[eq] == ' ') ++eq;
            if (k == 0 || eq >= line.size() || line[eq] != '=') malformed(number, "expected key = value");
            std::size_t v = eq + 1;
            while (v < line.size() && line[v] == ' ') ++v;
            if (v >= line.size()) malformed(number, "empty value for '" + line.substr(0, k) + "'");
            const int column = static_cast<int>(raw.find(line) + v) + 1;
            out.back().lines.push_back({number, line.substr(0, k), line.substr(v), column});
        }
        if (end == text.size()) break;
    }
    return out;
}

/// Splits at commas outside parentheses and brackets.
std::vector<std::string> split_list(const Line& l)
{
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : l.value) {
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    for (const auto& s : out) {
        if (s.empty()) malformed(l.number, "empty list item in '" + l.key + "'");
    }
    return out;
}

std::pair<std::string, std::string> split_key(const Line& l)
{
    const auto dot = l.key.find('.');
    if (dot == std::string::npos) return {l.key, ""};
    const std::string sub = l.key.substr(dot + 1);
    if (sub.empty()) malformed(l.number, "key '" + l.key + "' needs a name after the dot");
    return {l.key.substr(0, dot), sub};
}

double parse_number(const Line& l, const std::string& s)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        malformed(l.number, "expected a number, got '" + s + "'");
    }
}

Range parse_range(const Line& l)
{
    const auto parts = split_list(l);
    if (parts.size() != 2) malformed(l.number, "a range is 'lo, hi'");
    const Range r{parse_number(l, parts[0]), parse_number(l, parts[1])};
    if (!(r.lo <= r.hi)) malformed(l.number, "empty range");
    return r;
}

Expectation parse_expect(const Line& l)
{
    if (l.value == "pass") return Expectation::pass;
    if (l.value == "fail") return Expectation::fail;
    malformed(l.number, "expect must be pass or fail");
}

/// "s -> body": placeholder and body text.
std::pair<std::string, std::string> split_lambda(const Line& l)
{
    const auto arrow = l.value.find("->");
    if (arrow == std::string::npos) malformed(l.number, "expected 'var -> expression'");
    return {trim(l.value.substr(0, arrow)), trim(l.value.substr(arrow + 2))};
}

class Loader {
public:
    explicit Loader(std::string_view text) : sections_(split_sections(text)) {}

    ProblemBundle run()
    {
        if (std::none_of(sections_.begin(), sections_.end(), [](const Section& s) { return s.kind == "space"; })) {
            throw MalformedSection("missing [space] section");
        }
        std::set<std::string> names;
        for (const auto& s : sections_) {
            if (s.kind == "params") continue;
            const std::string key = s.kind == "space" ? "space " + (s.name.empty() ? "main" : s.name) : s.name;
            if (!names.insert(key).second) throw DuplicateName(s.kind == "space" ? key : s.name);
        }
        for (const auto& s : sections_) declare(s);
        for (const auto& s : sections_) parse(s);
        resolve();
        return std::move(b_);
    }

private:
    // --- pass 1: symbols ------------------------------------------------------

    void declare_independent(const std::string& x)
    {
        const auto role = b_.ctx.role(x);
        if (!role) {
            b_.ctx.add_independent(x);
        } else if (*role != SymbolRole::independent) {
            throw DuplicateName(x);
        }
    }

    void declare_dependent(const std::string& u, const std::vector<std::string>& over, int line)
    {
        const auto role = b_.ctx.role(u);
        if (!role) {
            b_.ctx.add_dependent(u, over);
        } else if (*role != SymbolRole::dependent || b_.ctx.derivative_vars(u) != over) {
            malformed(line, "'" + u + "' is declared twice with different roles or variables");
        }
    }

    void declare_if_new(const std::string& name, SymbolRole want)
    {
        const auto role = b_.ctx.role(name);
        if (role) {
            if (*role != want) throw DuplicateName(name);
            return;
        }
        if (want == SymbolRole::parameter) b_.ctx.add_parameter(name);
        if (want == SymbolRole::function) b_.ctx.add_function(name);
    }

    void declare(const Section& s)
    {
        if (s.kind == "space") {
            declare_space(s);
        } else if (s.kind == "params") {
            for (const auto& l : s.lines) {
                if (l.key == "names") {
                    for (const auto& p : split_list(l)) b_.ctx.add_parameter(p);
                } else if (l.key == "functions") {
                    for (const auto& f : split_list(l)) b_.ctx.add_function(f);
                }
            }
        } else if (s.kind == "ansatz") {
            std::vector<std::string> reduced;
            for (const auto& l : s.lines) {
                if (l.key == "reduced") reduced = split_list(l);
            }
            if (reduced.empty()) malformed(s.line, "ansatz '" + s.name + "' needs 'reduced'");
            for (const auto& r : reduced) declare_independent(r);
            for (const auto& l : s.lines) {
                if (l.key == "unknowns") {
                    for (const auto& u : split_list(l)) declare_dependent(u, reduced, l.number);
                }
            }
        } else if (s.kind == "solution") {
            for (const auto& l : s.lines) {
                const auto [key, sub] = split_key(l);
                if (key == "solve") {
                    declare_if_new(sub, SymbolRole::parameter);
                } else if (key == "quadrature" || key == "bind") {
                    declare_if_new(sub, SymbolRole::function);
                    declare_if_new(split_lambda(l).first, SymbolRole::parameter);
                }
            }
        }
    }

    void declare_space(const Section& s)
    {
        const std::string name = s.name.empty() ? "main" : s.name;
        std::vector<std::string> indeps;
        std::vector<std::string> deps;
        std::vector<std::string> derivs;
        std::string promote;
        std::string from = "main";
        int max_order = 8;
        for (const auto& l : s.lines) {
            if (l.key == "independent") {
                indeps = split_list(l);
            } else if (l.key == "dependent") {
                deps = split_list(l);
            } else if (l.key == "derivatives") {
                derivs = split_list(l);
            } else if (l.key == "promote") {
                promote = l.value;
            } else if (l.key == "from") {
                from = l.value;
            } else if (l.key == "max_order") {
                max_order = static_cast<int>(parse_number(l, l.value));
            } else {
                malformed(l.number, "unknown key '" + l.key + "' in [space]");
            }
        }
        if (promote.empty()) {
            if (indeps.empty()) malformed(s.line, "space '" + name + "' declares no independent variables");
            for (const auto& x : indeps) declare_independent(x);
            for (const auto& u : deps) declare_dependent(u, indeps, s.line);
            b_.spaces.emplace(name, JetSpace(indeps, deps, max_order));
            return;
        }
        // promote = u -> x3: u becomes a coordinate, its first derivatives become dependents.
        auto base = b_.spaces.find(from);
        if (base == b_.spaces.end()) malformed(s.line, "promoted space refers to unknown space '" + from + "'");
        const auto arrow = promote.find("->");
        if (arrow == std::string::npos) malformed(s.line, "promote expects 'u -> x'");
        const std::string u = trim(promote.substr(0, arrow));
        const std::string x = trim(promote.substr(arrow + 2));
        if (!base->second.has_dependent(u)) malformed(s.line, "'" + u + "' is not a dependent of space '" + from + "'");
        const auto& orig = base->second.independents();
        if (derivs.size() != orig.size()) {
            malformed(s.line, "promoted space needs one derivative name per independent of '" + from + "'");
        }
        declare_independent(x);
        std::vector<std::string> all = orig;
        all.push_back(x);
        for (const auto& v : derivs) declare_dependent(v, all, s.line);
        for (const auto& v : deps) declare_dependent(v, all, s.line);
        b_.spaces.emplace(name, JetSpace::promoted(orig, x, derivs, deps, max_order));
    }

    // --- pass 2: content ------------------------------------------------------

    Expr expr(const Line& l, const std::string& text)
    {
        Expr e = parse_expression(text, b_.ctx, {l.number, l.column});
        all_.push_back(e);
        return e;
    }

    Expr expr(const Line& l) { return expr(l, l.value); }

    DomainConstraint constraint(const Line& l)
    {
        auto c = parse_constraint(l.value, b_.ctx, {l.number, l.column});
        all_.push_back(c.lhs);
        all_.push_back(c.rhs);
        return c;
    }

    std::pair<Expr, Expr> equation(const Line& l)
    {
        auto [lhs, rhs] = parse_equation(l.value, b_.ctx, {l.number, l.column});
        all_.push_back(rhs);
        return {lhs, rhs};
    }

    Rewrite solved(const Line& l, const JetSpace* space)
    {
        auto [lhs, rhs] = equation(l);
        if (!lhs.is(Kind::jet)) malformed(l.number, "left side must be a dependent variable or one of its derivatives");
        const JetCoord c = lhs.jet_coord();
        if (space != nullptr) {
            if (!space->has_dependent(c.dependent)) malformed(l.number, "'" + c.dependent + "' is not a dependent of this space");
            for (const auto& x : c.index) {
                if (!space->has_independent(x)) malformed(l.number, "'" + x + "' is not an independent of this space");
            }
        }
        return {c, rhs};
    }

    const JetSpace& space_named(const std::string& name, int line)
    {
        auto it = b_.spaces.find(name);
        if (it == b_.spaces.end()) malformed(line, "unknown space '" + name + "'");
        return it->second;
    }

    /// Shared keys of checkable sections; returns false when the key is not one of them.
    bool settings_key(const Line& l, CheckSettings& s)
    {
        const auto [key, sub] = split_key(l);
        if (key == "constraint" && sub.empty()) {
            s.constraints.push_back(constraint(l));
        } else if (key == "range" && !sub.empty()) {
            s.ranges[sub] = parse_range(l);
        } else if (key == "expect" && sub.empty()) {
            s.expect = parse_expect(l);
        } else {
            return false;
        }
        return true;
    }

    [[noreturn]] void unknown_key(const Section& s, const Line& l)
    {
        malformed(l.number, "unknown key '" + l.key + "' in [" + s.kind + " " + s.name + "]");
    }

    std::string space_of(const Section& s)
    {
        for (const auto& l : s.lines) {
            if (l.key == "space") {
                space_named(l.value, l.number);
                return l.value;
            }
        }
        return "main";
    }

    void parse(const Section& s)
    {
        if (s.kind == "space") return;
        if (s.kind == "params") return parse_params(s);
        b_.sections.push_back({s.kind, s.name});
        if (s.kind == "equation") return parse_equation_section(s);
        if (s.kind == "operator") return parse_operator(s);
        if (s.kind == "ansatz") return parse_ansatz(s);
        if (s.kind == "reduced") return parse_reduced(s);
        if (s.kind == "solution") return parse_solution(s);
        if (s.kind == "backlund") return parse_backlund(s);
        if (s.kind == "overdetermined") return parse_overdetermined(s);
    }

    void parse_params(const Section& s)
    {
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (key == "names" || key == "functions") continue;
            if (key == "constraint" && sub.empty()) {
                b_.constraints.push_back(constraint(l));
            } else if (key == "range" && !sub.empty()) {
                b_.ranges[sub] = parse_range(l);
            } else {
                malformed(l.number, "unknown key '" + l.key + "' in [params]");
            }
        }
    }

    void parse_equation_section(const Section& s)
    {
        EquationSystem sys;
        sys.space = b_.spaces.at(space_of(s));
        int count = 0;
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (key == "space") continue;
            if (key == "eq") {
                auto [lead, rhs] = solved(l, &sys.space);
                sys.equations.push_back({sub.empty() ? s.name + (count == 0 ? "" : "." + std::to_string(count + 1)) : sub,
                                         lead, rhs});
                ++count;
            } else if (key == "constraint" && sub.empty()) {
                sys.constraints.push_back(constraint(l));
            } else {
                unknown_key(s, l);
            }
        }
        if (sys.equations.empty()) malformed(s.line, "equation '" + s.name + "' has no 'eq'");
        // Principal square roots need positive radicands.
        for (const auto& eq : sys.equations) {
            transform(eq.rhs, [&](const Expr& n) -> std::optional<Expr> {
                if (n.is(Kind::function) && n.fn() == Fn::sqrt) {
                    const DomainConstraint c{n.arg(), Relation::gt, Expr(0)};
                    if (std::none_of(sys.constraints.begin(), sys.constraints.end(), [&](const DomainConstraint& d) {
                            return d.relation == c.relation && d.lhs == c.lhs && d.rhs == c.rhs;
                        })) {
                        sys.constraints.push_back(c);
                    }
                }
                return std::nullopt;
            });
        }
        b_.equations.emplace(s.name, std::move(sys));
    }

    void parse_operator(const Section& s)
    {
        OperatorEntry op;
        op.space = space_of(s);
        const JetSpace& js = b_.spaces.at(op.space);
        std::string kind = "point";
        VectorField vf;
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (key == "space" || settings_key(l, op.settings)) continue;
            if (key == "kind") {
                if (l.value != "point" && l.value != "canonical") malformed(l.number, "kind must be point or canonical");
                kind = l.value;
            } else if (key == "system") {
                op.system = l.value;
            } else if (key == "mode") {
                auto m = mode_from_name(l.value);
                if (!m) malformed(l.number, "mode must be classical, conditional or lb");
                op.mode = *m;
            } else if (key == "xi" && !sub.empty()) {
                if (!js.has_independent(sub)) malformed(l.number, "'" + sub + "' is not an independent of this space");
                vf.xi[sub] = expr(l);
            } else if (key == "eta" && !sub.empty()) {
                if (!js.has_dependent(sub)) malformed(l.number, "'" + sub + "' is not a dependent of this space");
                vf.eta[sub] = expr(l);
            } else {
                unknown_key(s, l);
            }
        }
        if (kind == "canonical") {
            if (!vf.xi.empty()) malformed(s.line, "canonical operator '" + s.name + "' has xi components");
            op.canonical = CanonicalOperator{vf.eta};
        } else {
            op.point = vf;
        }
        b_.operators.emplace(s.name, std::move(op));
    }

    void parse_ansatz(const Section& s)
    {
        AnsatzEntry a;
        a.ansatz.name = s.name;
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (settings_key(l, a.settings)) continue;
            if (key == "system") {
                a.system = l.value;
            } else if (key == "reduced") {
                a.ansatz.reduced = split_list(l);
            } else if (key == "unknowns") {
                a.ansatz.unknowns = split_list(l);
            } else if (key == "target") {
                a.ansatz.targets.push_back(solved(l, nullptr));
            } else if (key == "where") {
                auto [lhs, rhs] = equation(l);
                if (!lhs.is(Kind::symbol)) malformed(l.number, "where defines a reduced variable: 'omega = ...'");
                a.ansatz.where.emplace_back(lhs.name(), rhs);
            } else if (key == "assume") {
                if (l.value != "positive") malformed(l.number, "the only assumption is 'positive'");
                a.ansatz.assume_positive = true;
            } else if (key == "derive") {
                a.derive = parse_expect(l);
            } else {
                unknown_key(s, l);
            }
        }
        a.ansatz.constraints = a.settings.constraints;
        if (a.system.empty()) malformed(s.line, "ansatz '" + s.name + "' needs 'system'");
        if (a.ansatz.targets.empty()) malformed(s.line, "ansatz '" + s.name + "' has no 'target'");
        b_.ansatze.emplace(s.name, std::move(a));
    }

    void parse_reduced(const Section& s)
    {
        ReducedEntry r;
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (settings_key(l, r.settings)) continue;
            if (key == "ansatz") {
                r.ansatz = l.value;
            } else if (key == "eq") {
                auto [lead, rhs] = solved(l, nullptr);
                r.system.equations.push_back(
                    {sub.empty() ? s.name + "." + std::to_string(r.system.equations.size() + 1) : sub, lead, rhs});
            } else {
                unknown_key(s, l);
            }
        }
        r.system.constraints = r.settings.constraints;
        if (r.ansatz.empty()) malformed(s.line, "reduced system '" + s.name + "' needs 'ansatz'");
        b_.reduced.emplace(s.name, std::move(r));
    }

    void parse_solution(const Section& s)
    {
        SolutionEntry e;
        std::map<std::string, Expr> guesses;
        std::map<std::string, std::pair<Expr, Expr>> brackets;
        std::map<std::string, double> lowers;
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (key == "range") malformed(l.number, "solutions use 'box' rather than 'range'");
            if (settings_key(l, e.settings)) continue;
            if (key == "system") {
                e.system = l.value;
            } else if (key == "kind") {
                if (l.value == "explicit") e.form.kind = SolutionKind::explicit_form;
                else if (l.value == "implicit") e.form.kind = SolutionKind::implicit_form;
                else if (l.value == "quadrature") e.form.kind = SolutionKind::quadrature_backed;
                else malformed(l.number, "kind must be explicit, implicit or quadrature");
            } else if (key == "value") {
                auto [c, rhs] = solved(l, nullptr);
                if (c.order() != 0) malformed(l.number, "value gives a dependent variable, not a derivative");
                e.form.values[c.dependent] = rhs;
            } else if (key == "solve") {
                e.form.implicit.push_back({sub, expr(l), Expr(0), std::nullopt});
            } else if (key == "guess") {
                guesses[sub] = expr(l);
            } else if (key == "bracket") {
                const auto parts = split_list(l);
                if (parts.size() != 2) malformed(l.number, "bracket is 'lo, hi'");
                brackets[sub] = {expr(l, parts[0]), expr(l, parts[1])};
            } else if (key == "quadrature") {
                const auto [var, body] = split_lambda(l);
                e.form.quadratures.push_back({sub, expr(l, body), var, 0.0});
            } else if (key == "lower") {
                lowers[sub] = parse_number(l, l.value);
            } else if (key == "box") {
                e.plan.box[sub] = parse_range(l);
            } else if (key == "grid") {
                e.plan.grid[sub] = static_cast<int>(parse_number(l, l.value));
            } else if (key == "count") {
                e.plan.count = static_cast<int>(parse_number(l, l.value));
            } else if (key == "h") {
                e.plan.h = parse_number(l, l.value);
            } else if (key == "tol") {
                e.plan.tolerance = parse_number(l, l.value);
            } else if (key == "fix") {
                e.binding.values[sub] = parse_number(l, l.value);
            } else if (key == "bind") {
                const auto [var, body] = split_lambda(l);
                e.binding.functions.insert_or_assign(sub, FunctionInstance::from_body(expr(l, body), var));
            } else if (key == "method") {
                if (l.value != "symbolic" && l.value != "fd") malformed(l.number, "method must be symbolic or fd");
                e.finite_differences = l.value == "fd";
            } else {
                unknown_key(s, l);
            }
        }
        for (auto& sym : e.form.implicit) {
            if (auto g = guesses.find(sym.key); g != guesses.end()) sym.guess = g->second;
            if (auto br = brackets.find(sym.key); br != brackets.end()) sym.bracket = br->second;
        }
        for (auto& q : e.form.quadratures) {
            if (auto lo = lowers.find(q.function); lo != lowers.end()) q.lower = lo->second;
        }
        if (e.form.kind == SolutionKind::implicit_form) e.finite_differences = true;
        e.form.constraints = e.settings.constraints;
        if (e.system.empty()) malformed(s.line, "solution '" + s.name + "' needs 'system'");
        if (e.form.values.empty()) malformed(s.line, "solution '" + s.name + "' has no 'value'");
        b_.solutions.emplace(s.name, std::move(e));
    }

    void parse_backlund(const Section& s)
    {
        BacklundEntry e;
        e.relation.space = b_.spaces.at(space_of(s));
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (key == "space" || settings_key(l, e.settings)) continue;
            if (key == "relation") {
                e.relation.relations.push_back(solved(l, &e.relation.space));
            } else if (key == "source") {
                e.source = l.value;
            } else if (key == "target") {
                e.target = l.value;
            } else {
                unknown_key(s, l);
            }
        }
        e.relation.constraints = e.settings.constraints;
        if (e.source.empty() || e.target.empty()) malformed(s.line, "backlund '" + s.name + "' needs source and target");
        b_.backlund.emplace(s.name, std::move(e));
    }

    void parse_overdetermined(const Section& s)
    {
        OverdeterminedEntry e;
        e.system.space = b_.spaces.at(space_of(s));
        for (const auto& l : s.lines) {
            const auto [key, sub] = split_key(l);
            if (key == "space" || settings_key(l, e.settings)) continue;
            if (key == "assign") {
                e.system.assignments.push_back(solved(l, &e.system.space));
            } else {
                unknown_key(s, l);
            }
        }
        e.system.constraints = e.settings.constraints;
        if (e.system.assignments.empty()) malformed(s.line, "overdetermined '" + s.name + "' has no 'assign'");
        b_.overdetermined.emplace(s.name, std::move(e));
    }

    // --- cross references -----------------------------------------------------

    const EquationSystem& system_named(const std::string& name, const std::string& user)
    {
        auto it = b_.equations.find(name);
        if (it == b_.equations.end()) throw MalformedSection(user + " refers to unknown equation '" + name + "'");
        return it->second;
    }

    void resolve()
    {
        for (auto& [name, op] : b_.operators) {
            if (op.system.empty()) {
                for (const auto& ref : b_.sections) {
                    if (ref.kind == "equation" && b_.equations.at(ref.name).space.independents() ==
                                                      b_.spaces.at(op.space).independents()) {
                        op.system = ref.name;
                        break;
                    }
                }
                if (op.system.empty()) throw MalformedSection("operator '" + name + "' has no system on its space");
            }
            system_named(op.system, "operator '" + name + "'");
        }
        for (auto& [name, a] : b_.ansatze) {
            system_named(a.system, "ansatz '" + name + "'");
        }
        for (auto& [name, r] : b_.reduced) {
            auto it = b_.ansatze.find(r.ansatz);
            if (it == b_.ansatze.end()) throw MalformedSection("reduced '" + name + "' refers to unknown ansatz '" + r.ansatz + "'");
            r.system.space = reduced_space(it->second.ansatz);
            for (const auto& eq : r.system.equations) {
                if (!r.system.space.has_dependent(eq.lead.dependent)) {
                    throw MalformedSection("reduced '" + name + "': '" + eq.lead.dependent + "' is not an unknown of the ansatz");
                }
            }
        }
        for (auto& [name, s] : b_.solutions) {
            system_named(s.system, "solution '" + name + "'");
        }
        for (auto& [name, e] : b_.backlund) {
            e.relation.source = system_named(e.source, "backlund '" + name + "'");
            e.relation.target = system_named(e.target, "backlund '" + name + "'");
            // Both equations are read on the relation's space, which carries u and w.
            e.relation.source.space = e.relation.space;
            e.relation.target.space = e.relation.space;
        }
        // Parameters that appear in a denominator are taken to be nonzero.
        std::set<std::string> divisors;
        for (const auto& e : all_) {
            transform(e, [&](const Expr& n) -> std::optional<Expr> {
                if (n.is(Kind::power) && n.base().is(Kind::symbol) && n.exponent().is_number() && n.exponent().value() < 0 &&
                    b_.ctx.parameters().count(n.base().name()) != 0) {
                    divisors.insert(n.base().name());
                }
                return std::nullopt;
            });
        }
        for (const auto& p : divisors) {
            const DomainConstraint c{Expr::symbol(p), Relation::ne, Expr(0)};
            if (std::none_of(b_.constraints.begin(), b_.constraints.end(), [&](const DomainConstraint& d) {
                    return d.relation == c.relation && d.lhs == c.lhs && d.rhs == c.rhs;
                })) {
                b_.constraints.push_back(c);
            }
        }
    }

    std::vector<Section> sections_;
    ProblemBundle b_;
    std::vector<Expr> all_;
};

std::string join(const std::vector<std::string>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out += (i == 0 ? "" : ", ") + xs[i];
    }
    return out;
}

void describe_constraints(std::ostringstream& os, const std::vector<DomainConstraint>& cs)
{
    for (const auto& c : cs) {
        os << "  constraint " << print_constraint(c) << "\n";
    }
}

void describe_settings(std::ostringstream& os, const CheckSettings& s)
{
    for (const auto& [x, r] : s.ranges) {
        os << "  range " << x << " = [" << r.lo << ", " << r.hi << "]\n";
    }
    os << "  expect " << expectation_name(s.expect) << "\n";
}

std::string space_name(const ProblemBundle& b, const JetSpace& js)
{
    for (const auto& [name, s] : b.spaces) {
        if (s.independents() == js.independents() && s.dependents() == js.dependents()) return name;
    }
    return "(" + join(js.independents()) + "; " + join(js.dependents()) + ")";
}

void describe_system(std::ostringstream& os, const EquationSystem& sys)
{
    for (const auto& eq : sys.equations) {
        os << "  " << eq.name << ": " << eq.lead.key() << " = " << print_expression(eq.rhs) << "\n";
    }
    describe_constraints(os, sys.constraints);
}

} // namespace

ProblemBundle parse_problem(std::string_view text)
{
    return Loader(text).run();
}

ProblemBundle load_problem(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

SamplingSpec sampling_for(const ProblemBundle& b, const CheckSettings& s)
{
    SamplingSpec spec;
    spec.ranges = b.ranges;
    for (const auto& [x, r] : s.ranges) {
        spec.ranges[x] = r;
    }
    spec.constraints = b.constraints;
    spec.constraints.insert(spec.constraints.end(), s.constraints.begin(), s.constraints.end());
    return spec;
}

std::string describe(const ProblemBundle& b)
{
    std::ostringstream os;
    for (const auto& [name, js] : b.spaces) {
        os << "space " << name << ": independent " << join(js.independents()) << "; dependent " << join(js.dependents());
        if (js.is_promoted()) os << "; promoted " << *js.promoted_variable();
        os << "\n";
    }
    const std::vector<std::string> params{b.ctx.parameters().begin(), b.ctx.parameters().end()};
    const std::vector<std::string> fns{b.ctx.functions().begin(), b.ctx.functions().end()};
    if (!params.empty()) os << "parameters: " << join(params) << "\n";
    if (!fns.empty()) os << "functions: " << join(fns) << "\n";
    for (const auto& [x, r] : b.ranges) {
        os << "range " << x << " = [" << r.lo << ", " << r.hi << "]\n";
    }
    describe_constraints(os, b.constraints);
    for (const auto& ref : b.sections) {
        os << ref.kind << " " << ref.name << "\n";
        if (ref.kind == "equation") {
            const auto& sys = b.equations.at(ref.name);
            os << "  space " << space_name(b, sys.space) << "\n";
            describe_system(os, sys);
        } else if (ref.kind == "operator") {
            const auto& op = b.operators.at(ref.name);
            os << "  space " << op.space << "; system " << op.system << "; mode " << mode_name(op.mode) << "\n";
            if (op.point) {
                for (const auto& [x, e] : op.point->xi) os << "  xi " << x << " = " << print_expression(e) << "\n";
                for (const auto& [u, e] : op.point->eta) os << "  eta " << u << " = " << print_expression(e) << "\n";
            } else {
                for (const auto& [u, e] : op.canonical->characteristic) {
                    os << "  characteristic " << u << " = " << print_expression(e) << "\n";
                }
            }
            describe_settings(os, op.settings);
        } else if (ref.kind == "ansatz") {
            const auto& a = b.ansatze.at(ref.name);
            os << "  system " << a.system << "; reduced " << join(a.ansatz.reduced) << "; unknowns "
               << join(a.ansatz.unknowns) << (a.ansatz.assume_positive ? "; assume positive" : "") << "\n";
            for (const auto& [c, e] : a.ansatz.targets) os << "  target " << c.key() << " = " << print_expression(e) << "\n";
            for (const auto& [r, e] : a.ansatz.where) os << "  where " << r << " = " << print_expression(e) << "\n";
            describe_constraints(os, a.ansatz.constraints);
            if (a.derive) os << "  derive " << expectation_name(*a.derive) << "\n";
        } else if (ref.kind == "reduced") {
            const auto& r = b.reduced.at(ref.name);
            os << "  ansatz " << r.ansatz << "\n";
            describe_system(os, r.system);
            describe_settings(os, r.settings);
        } else if (ref.kind == "solution") {
            const auto& s = b.solutions.at(ref.name);
            static const char* kinds[] = {"explicit", "implicit", "quadrature"};
            os << "  system " << s.system << "; kind " << kinds[static_cast<int>(s.form.kind)] << "; method "
               << (s.finite_differences ? "fd" : "symbolic") << "\n";
            for (const auto& [u, e] : s.form.values) os << "  value " << u << " = " << print_expression(e) << "\n";
            for (const auto& sym : s.form.implicit) {
                os << "  solve " << sym.key << ": " << print_expression(sym.residual) << " = 0, guess "
                   << print_expression(sym.guess);
                if (sym.bracket) {
                    os << ", bracket [" << print_expression(sym.bracket->first) << ", "
                       << print_expression(sym.bracket->second) << "]";
                }
                os << "\n";
            }
            for (const auto& q : s.form.quadratures) {
                os << "  quadrature " << q.function << "(x) = integral of " << print_expression(q.integrand) << " d"
                   << q.var << " from " << q.lower << "\n";
            }
            for (const auto& [x, r] : s.plan.box) os << "  box " << x << " = [" << r.lo << ", " << r.hi << "]\n";
            for (const auto& [x, n] : s.plan.grid) os << "  grid " << x << " = " << n << "\n";
            for (const auto& [p, v] : s.binding.values) os << "  fix " << p << " = " << v << "\n";
            for (const auto& [f, inst] : s.binding.functions) {
                os << "  bind " << f << "(" << inst.var() << ") = " << print_expression(*inst.derivative(0)) << "\n";
            }
            os << "  count " << s.plan.count << "; h " << s.plan.h;
            if (s.plan.tolerance) os << "; tol " << *s.plan.tolerance;
            os << "\n";
            describe_constraints(os, s.form.constraints);
            describe_settings(os, s.settings);
        } else if (ref.kind == "backlund") {
            const auto& e = b.backlund.at(ref.name);
            os << "  space " << space_name(b, e.relation.space) << "; source " << e.source << "; target " << e.target << "\n";
            for (const auto& [c, r] : e.relation.relations) os << "  relation " << c.key() << " = " << print_expression(r) << "\n";
            describe_constraints(os, e.relation.constraints);
            describe_settings(os, e.settings);
        } else if (ref.kind == "overdetermined") {
            const auto& e = b.overdetermined.at(ref.name);
            os << "  space " << space_name(b, e.system.space) << "\n";
            for (const auto& [c, r] : e.system.assignments) os << "  assign " << c.key() << " = " << print_expression(r) << "\n";
            describe_constraints(os, e.system.constraints);
            describe_settings(os, e.settings);
        }
    }
    return os.str();
}

} // namespace symred
