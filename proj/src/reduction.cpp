#include "symred/reduction.hpp"

#include "symred/error.hpp"
#include "symred/linear.hpp"

#include <algorithm>
#include <set>

namespace symred {

JetSpace reduced_space(const Ansatz& a)
{
    return JetSpace(a.reduced, a.unknowns);
}

namespace {

bool is_original_independent(const JetSpace& js, const std::string& x)
{
    return js.has_independent(x);
}

std::string slope_symbol(const std::string& r, const std::string& x)
{
    return "D#" + r + "#" + x;
}

/// Smallest multi-index containing both a and b (multiset union by maximum count).
std::vector<std::string> common_index(const JetCoord& a, const JetCoord& b)
{
    std::vector<std::string> out;
    std::set_union(a.index.begin(), a.index.end(), b.index.begin(), b.index.end(), std::back_inserter(out));
    return out;
}

std::vector<std::string> index_difference(const std::vector<std::string>& big, const std::vector<std::string>& small)
{
    std::vector<std::string> out;
    std::set_difference(big.begin(), big.end(), small.begin(), small.end(), std::back_inserter(out));
    return out;
}

std::vector<DomainConstraint> express_constraints(const AnsatzCalculus& calc, const std::vector<DomainConstraint>& cs)
{
    std::vector<DomainConstraint> out;
    for (const auto& c : cs) {
        out.push_back({calc.express(c.lhs), c.relation, calc.express(c.rhs)});
    }
    return out;
}

} // namespace

AnsatzCalculus::AnsatzCalculus(const Ansatz& a, const JetSpace& original)
    : ansatz_(a), original_(original), reduced_(reduced_space(a))
{
    const auto& xs = original_.independents();
    std::vector<std::string> defined;
    for (const auto& r : ansatz_.reduced) {
        if (is_original_independent(original_, r)) {
            for (const auto& x : xs) {
                dr_[r][x] = Expr(r == x ? 1 : 0);
            }
            continue;
        }
        auto it = std::find_if(ansatz_.where.begin(), ansatz_.where.end(), [&](const auto& w) { return w.first == r; });
        if (it == ansatz_.where.end()) {
            throw Error("reduced variable " + r + " is neither an independent variable nor defined by a where clause");
        }
        defined.push_back(r);
        for (const auto& x : xs) {
            dr_[r][x] = Expr::symbol(slope_symbol(r, x));
        }
    }

    // D_x r = D_x G_r, where the right side depends linearly on the unknown slopes D_x s.
    std::vector<Expr> determinants;
    for (const auto& x : xs) {
        if (defined.empty()) {
            break;
        }
        const std::size_t n = defined.size();
        Matrix m(n, std::vector<Expr>(n));
        std::vector<Expr> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Expr& g = std::find_if(ansatz_.where.begin(), ansatz_.where.end(),
                                         [&](const auto& w) { return w.first == defined[i]; })
                                ->second;
            const Expr eq = raw_derivative(g, x);
            Substitution zero;
            for (std::size_t k = 0; k < n; ++k) {
                const Expr w = Expr::symbol(slope_symbol(defined[k], x));
                const Expr coef = diff(eq, w);
                for (std::size_t l = 0; l < n; ++l) {
                    if (depends_on(coef, slope_symbol(defined[l], x))) {
                        throw SingularImplicitSystem("definition of " + defined[i] + " is not linear in its slopes");
                    }
                }
                m[i][k] = Expr(i == k ? 1 : 0) - coef;
                zero.emplace(slope_symbol(defined[k], x), Expr(0));
            }
            b[i] = substitute(eq, zero);
        }
        auto slopes = solve_linear(m, b);
        if (!slopes) {
            throw SingularImplicitSystem("implicit reduced-variable definitions are singular");
        }
        for (std::size_t i = 0; i < n; ++i) {
            dr_[defined[i]][x] = (*slopes)[i];
        }
        const Expr det = simplify(determinant(m));
        if (!det.is_number() && std::none_of(determinants.begin(), determinants.end(),
                                             [&](const Expr& d) { return d == det; })) {
            determinants.push_back(det);
        }
        coord_cache_.clear();
    }
    coord_cache_.clear();

    constraints_ = ansatz_.constraints;
    for (const auto& d : determinants) {
        constraints_.push_back({d, Relation::ne, Expr(0)});
    }
    for (const auto& r : defined) {
        const Expr& g = std::find_if(ansatz_.where.begin(), ansatz_.where.end(), [&](const auto& w) { return w.first == r; })
                            ->second;
        const Expr value = express(g);
        implicit_.push_back({r, Expr::symbol(r) - value, substitute(value, {{r, Expr(0)}}), std::nullopt});
    }
}

Expr AnsatzCalculus::reduced_derivative(const std::string& r, const std::string& x) const
{
    return dr_.at(r).at(x);
}

Expr AnsatzCalculus::express_coordinate(const JetCoord& c) const
{
    for (const auto& [t, rhs] : ansatz_.targets) {
        auto rest = c.over(t);
        if (!rest) {
            continue;
        }
        if (auto it = coord_cache_.find(c.key()); it != coord_cache_.end()) {
            return it->second;
        }
        Expr value;
        if (rest->empty()) {
            const auto used = original_.jet_coordinates(rhs);
            if (std::any_of(used.begin(), used.end(), [&](const JetCoord& d) { return d.over(t).has_value(); })) {
                throw Error("ansatz target " + t.key() + " refers to itself");
            }
            value = express(rhs);
        } else {
            JetCoord parent = c;
            const std::string last = rest->back();
            parent.index.erase(std::find(parent.index.begin(), parent.index.end(), last));
            value = raw_derivative(express_coordinate(parent), last);
        }
        return coord_cache_.emplace(c.key(), value).first->second;
    }
    return Expr::jet(c);
}

Expr AnsatzCalculus::express(const Expr& e) const
{
    Substitution subs;
    for (const auto& c : original_.jet_coordinates(e)) {
        const Expr v = express_coordinate(c);
        if (!(v == Expr::jet(c))) {
            subs.emplace(c.key(), v);
        }
    }
    return subs.empty() ? e : substitute(e, subs);
}

Expr AnsatzCalculus::raw_derivative(const Expr& e, const std::string& x) const
{
    std::vector<Expr> terms{diff(e, Expr::symbol(x))};
    for (const auto& c : original_.jet_coordinates(e)) {
        const Expr d = diff(e, Expr::jet(c));
        if (!d.is_zero()) {
            terms.push_back(express_coordinate(c.raised(x)) * d);
        }
    }
    for (const auto& p : reduced_.jet_coordinates(e)) {
        const Expr d = diff(e, Expr::jet(p));
        if (d.is_zero()) {
            continue;
        }
        for (const auto& r : ansatz_.reduced) {
            const Expr slope = dr_.at(r).at(x);
            if (!slope.is_zero()) {
                terms.push_back(Expr::jet(p.raised(r)) * slope * d);
            }
        }
    }
    for (const auto& r : ansatz_.reduced) {
        if (is_original_independent(original_, r)) {
            continue;
        }
        const Expr d = diff(e, Expr::symbol(r));
        if (!d.is_zero()) {
            terms.push_back(dr_.at(r).at(x) * d);
        }
    }
    return express(make_sum(std::move(terms)));
}

Expr AnsatzCalculus::derivative(const Expr& e, const std::string& x) const
{
    return raw_derivative(express(e), x);
}

Expr AnsatzCalculus::derivative(const Expr& e, const std::vector<std::string>& index) const
{
    Expr r = express(e);
    for (const auto& x : index) {
        r = raw_derivative(r, x);
    }
    return r;
}

std::map<std::string, Expr> ansatz_derivatives(const Ansatz& a, const JetSpace& js)
{
    const AnsatzCalculus calc(a, js);
    std::map<std::string, Expr> out;
    for (const auto& [t, rhs] : a.targets) {
        for (const auto& x : js.independents()) {
            out.emplace(t.raised(x).key(), calc.derivative(rhs, x));
        }
    }
    return out;
}

std::vector<std::pair<std::string, Expr>> ansatz_residuals(const AnsatzCalculus& calc, const EquationSystem& original)
{
    std::vector<std::pair<std::string, Expr>> out;
    for (std::size_t i = 0; i < original.equations.size(); ++i) {
        const auto& eq = original.equations[i];
        out.emplace_back(eq.name.empty() ? "equation " + std::to_string(i + 1) : eq.name, calc.express(eq.residual()));
    }
    const auto& targets = calc.ansatz().targets;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t j = i + 1; j < targets.size(); ++j) {
            const JetCoord& a = targets[i].first;
            const JetCoord& b = targets[j].first;
            if (a.dependent != b.dependent) {
                continue;
            }
            const auto m = common_index(a, b);
            const Expr via_a = calc.derivative(targets[i].second, index_difference(m, a.index));
            const Expr via_b = calc.derivative(targets[j].second, index_difference(m, b.index));
            out.emplace_back("compatibility " + a.key() + "," + b.key(), via_a - via_b);
        }
    }
    for (const auto& [label, r] : out) {
        for (const auto& c : calc.original().jet_coordinates(r)) {
            if (c.order() > 0) {
                throw UnreducedVariable(label + " still contains " + c.key() + ", which the ansatz does not determine");
            }
        }
    }
    return out;
}

namespace {

SamplingSpec reduction_sampling(const AnsatzCalculus& calc, const EquationSystem& original,
                                const ReducedSystem& candidate, const CheckOptions& opts)
{
    SamplingSpec s = opts.sampling;
    for (const auto& c : express_constraints(calc, original.constraints)) {
        s.constraints.push_back(c);
    }
    for (const auto& c : express_constraints(calc, calc.constraints())) {
        s.constraints.push_back(c);
    }
    s.constraints.insert(s.constraints.end(), candidate.constraints.begin(), candidate.constraints.end());
    s.implicit.insert(s.implicit.end(), calc.implicit_symbols().begin(), calc.implicit_symbols().end());
    return s;
}

} // namespace

CheckReport verify_reduction(const Ansatz& a, const EquationSystem& original, const ReducedSystem& candidate,
                             std::uint64_t seed, const CheckOptions& opts)
{
    const AnsatzCalculus calc(a, original.space);
    std::vector<Expr> residuals;
    std::vector<std::string> labels;
    for (auto& [label, r] : ansatz_residuals(calc, original)) {
        residuals.push_back(restrict_to_manifold(r, candidate, {}, opts.order_cap));
        labels.push_back(label);
    }
    return judge(std::move(residuals), std::move(labels), reduction_sampling(calc, original, candidate, opts), seed,
                 opts.zero);
}

// --- derivation ------------------------------------------------------------

namespace {

class Deriver {
public:
    Deriver(const AnsatzCalculus& calc, const EquationSystem& original, std::uint64_t seed, const CheckOptions& opts)
        : calc_(calc), original_(original), seed_(seed), opts_(opts)
    {
        for (const auto& x : original.space.independents()) {
            if (std::find(calc.ansatz().reduced.begin(), calc.ansatz().reduced.end(), x) == calc.ansatz().reduced.end()) {
                eliminated_.insert(x);
            }
        }
        positive_.insert(positive_.end(), calc.constraints().begin(), calc.constraints().end());
        for (const auto& c : express_constraints(calc, original.constraints)) {
            positive_.push_back(c);
        }
    }

    bool eliminated(const Expr& e) const
    {
        return contains_if(e, [&](const Expr& n) {
            if (n.is(Kind::symbol)) {
                return eliminated_.count(n.name()) != 0;
            }
            return n.is(Kind::jet) && calc_.original().has_dependent(n.name());
        });
    }

    const std::set<std::string>& eliminated_symbols() const noexcept { return eliminated_; }

    Expr log_rules(const Expr& e) const
    {
        return transform(e, [](const Expr& n) -> std::optional<Expr> {
            if (n.is(Kind::function) && n.fn() == Fn::ln) {
                const Expr& a = n.arg();
                if (a.is(Kind::power)) {
                    return a.exponent() * ln(a.base());
                }
                if (a.is(Kind::product) && a.value() > 0) {
                    std::vector<Expr> terms{ln(Expr(a.value()))};
                    for (const auto& f : a.args()) {
                        terms.push_back(ln(f));
                    }
                    return make_sum(std::move(terms));
                }
            }
            if (n.is(Kind::function) && n.fn() == Fn::exp) {
                const Expr& a = n.arg();
                std::vector<Expr> terms = a.is(Kind::sum) ? std::vector<Expr>(a.args().begin(), a.args().end())
                                                          : std::vector<Expr>{a};
                std::vector<Expr> factors;
                std::vector<Expr> rest;
                if (a.is(Kind::sum)) {
                    rest.emplace_back(a.value());
                }
                for (const auto& t : terms) {
                    auto [k, body] = split_coefficient(t);
                    if (body.is(Kind::function) && body.fn() == Fn::ln) {
                        factors.push_back(pow(body.arg(), Expr(k)));
                    } else {
                        rest.push_back(t);
                    }
                }
                if (factors.empty()) {
                    return std::nullopt;
                }
                factors.push_back(exp(make_sum(std::move(rest))));
                return make_product(std::move(factors));
            }
            return std::nullopt;
        });
    }

    Expr sqrt_rules(const Expr& e, std::vector<std::string>& notes) const
    {
        return transform(e, [&](const Expr& n) -> std::optional<Expr> {
            if (!n.is(Kind::function) || n.fn() != Fn::sqrt) {
                return std::nullopt;
            }
            for (const auto& c : positive_) {
                Expr root;
                if (c.relation == Relation::ge || c.relation == Relation::gt) {
                    root = c.lhs - c.rhs;
                } else if (c.relation == Relation::le || c.relation == Relation::lt) {
                    root = c.rhs - c.lhs;
                } else {
                    continue;
                }
                if (is_zero(n.arg() - pow(root, 2), opts_.sampling, seed_, opts_.zero).verdict == ZeroVerdict::zero) {
                    notes.push_back("sqrt(" + print_expression(n.arg()) + ") = " + print_expression(root) + " using " +
                                    print_constraint(c));
                    return root;
                }
            }
            return std::nullopt;
        });
    }

    Expr trig_split(const Expr& e) const
    {
        return transform(e, [&](const Expr& n) -> std::optional<Expr> {
            if (!n.is(Kind::function) || (n.fn() != Fn::sin && n.fn() != Fn::cos) || !n.arg().is(Kind::sum)) {
                return std::nullopt;
            }
            std::vector<Expr> el;
            std::vector<Expr> kept{Expr(n.arg().value())};
            for (const auto& t : n.arg().args()) {
                (eliminated(t) ? el : kept).push_back(t);
            }
            const Expr a = make_sum(std::move(el));
            const Expr b = make_sum(std::move(kept));
            if (a.is_zero() || b.is_zero()) {
                return std::nullopt;
            }
            if (n.fn() == Fn::sin) {
                return sin(a) * cos(b) + cos(a) * sin(b);
            }
            return cos(a) * cos(b) - sin(a) * sin(b);
        });
    }

    Expr pythagoras(const Expr& e) const
    {
        return transform(e, [&](const Expr& n) -> std::optional<Expr> {
            if (!n.is(Kind::power) || !n.exponent().is_integer() || n.exponent().value() < 2) {
                return std::nullopt;
            }
            const Expr& b = n.base();
            if (!b.is(Kind::function) || b.fn() != Fn::cos || !eliminated(b.arg())) {
                return std::nullopt;
            }
            return pow(b, n.exponent() - 2) * (1 - pow(sin(b.arg()), 2));
        });
    }

    /// Coefficients of the residual numerator with respect to monomials in eliminated quantities.
    std::vector<Expr> split(const Expr& residual, std::vector<std::string>& notes) const
    {
        Expr r = residual;
        if (calc_.ansatz().assume_positive) {
            for (int i = 0; i < 4; ++i) {
                const Expr next = log_rules(r);
                if (next == r) {
                    break;
                }
                r = next;
            }
        }
        r = sqrt_rules(r, notes);
        r = trig_split(r);
        Expr num = together(r).first;
        num = expand(num);
        for (int i = 0; i < 8; ++i) {
            const Expr next = expand(pythagoras(num));
            if (next == num) {
                break;
            }
            num = next;
        }
        std::map<Expr, std::vector<Expr>, ExprLess> groups;
        auto add_term = [&](const Expr& t) {
            auto [k, rest] = split_coefficient(t);
            std::vector<Expr> factors = rest.is(Kind::product) ? std::vector<Expr>(rest.args().begin(), rest.args().end())
                                                               : std::vector<Expr>{rest};
            std::vector<Expr> key;
            std::vector<Expr> coef{Expr(k)};
            for (const auto& f : factors) {
                (eliminated(f) ? key : coef).push_back(f);
            }
            groups[make_product(std::move(key))].push_back(make_product(std::move(coef)));
        };
        if (num.is(Kind::sum)) {
            for (const auto& t : num.args()) {
                add_term(t);
            }
            if (num.value() != 0) {
                add_term(Expr(num.value()));
            }
        } else {
            add_term(num);
        }
        std::vector<Expr> out;
        for (auto& [key, cs] : groups) {
            Expr c = make_sum(std::move(cs));
            if (is_zero(c, opts_.sampling, seed_, opts_.zero).verdict != ZeroVerdict::zero) {
                out.push_back(c);
            }
        }
        return out;
    }

private:
    const AnsatzCalculus& calc_;
    const EquationSystem& original_;
    std::uint64_t seed_;
    const CheckOptions& opts_;
    std::set<std::string> eliminated_;
    std::vector<DomainConstraint> positive_;
};

bool has_derivative(const JetSpace& js, const Expr& e)
{
    const auto cs = js.jet_coordinates(e);
    return std::any_of(cs.begin(), cs.end(), [](const JetCoord& c) { return c.order() > 0; });
}

/// Drops factors that carry no derivative of an unknown.
Expr strip_factors(const Expr& e, const JetSpace& js, std::vector<std::string>& notes)
{
    auto [common, rest] = factor_common(e);
    Expr body = common * rest;
    if (!body.is(Kind::product)) {
        return body;
    }
    std::vector<Expr> kept;
    std::vector<Expr> dropped;
    for (const auto& f : body.args()) {
        (has_derivative(js, f) ? kept : dropped).push_back(f);
    }
    if (kept.empty()) {
        return body;
    }
    if (!dropped.empty()) {
        notes.push_back("nonzero: " + print_expression(make_product(dropped)));
    }
    return make_product(std::move(kept));
}

} // namespace

Derivation derive_reduction(const Ansatz& a, const EquationSystem& original, std::uint64_t seed,
                            const CheckOptions& opts)
{
    Derivation out;
    const AnsatzCalculus calc(a, original.space);
    const Deriver deriver(calc, original, seed, opts);
    const JetSpace& rs = calc.reduced();

    for (const auto& x : deriver.eliminated_symbols()) {
        const bool used = std::any_of(a.targets.begin(), a.targets.end(), [&](const Rewrite& t) {
            return depends_on(t.second, x);
        }) || std::any_of(a.where.begin(), a.where.end(), [&](const auto& w) { return depends_on(w.second, x); });
        if (!used) {
            out.failure = "degenerate ansatz: terms in " + x + " cannot be eliminated because " + x + " appears in no target";
            return out;
        }
    }

    std::vector<Expr> equations;
    for (const auto& [label, r] : ansatz_residuals(calc, original)) {
        for (auto& c : deriver.split(r, out.assumptions)) {
            equations.push_back(std::move(c));
        }
    }
    out.assumptions.push_back("functions of eliminated variables in the residual are linearly independent");
    if (a.assume_positive) {
        out.assumptions.push_back("logarithm arguments are positive");
    }

    ReducedSystem sys;
    sys.space = rs;
    for (const auto& raw : equations) {
        Expr r = restrict_to_manifold(raw, sys, {}, opts.order_cap);
        r = together(r).first;
        if (is_zero(r, opts.sampling, seed, opts.zero).verdict == ZeroVerdict::zero) {
            continue;
        }
        r = strip_factors(r, rs, out.assumptions);
        std::vector<JetCoord> leads;
        for (const auto& c : rs.jet_coordinates(r)) {
            if (c.order() > 0 && !depends_on(diff(r, Expr::jet(c)), c.key())) {
                leads.push_back(c);
            }
        }
        if (leads.empty()) {
            if (r.is_number()) {
                out.failure = "inconsistent: reduced condition " + print_expression(r) + " = 0";
            } else if (!has_derivative(rs, r)) {
                out.failure = "condition without derivatives: " + print_expression(r) + " = 0";
            } else {
                out.failure = "no derivative enters linearly in " + print_expression(r) + " = 0";
            }
            return out;
        }
        auto has_lead = [&](const std::string& u) {
            return std::any_of(sys.equations.begin(), sys.equations.end(), [&](const Equation& e) { return e.lead.dependent == u; });
        };
        std::stable_sort(leads.begin(), leads.end(), [&](const JetCoord& x, const JetCoord& y) {
            if (x.order() != y.order()) {
                return x.order() > y.order();
            }
            return !has_lead(x.dependent) && has_lead(y.dependent);
        });
        const JetCoord lead = leads.front();
        const Expr coef = diff(r, Expr::jet(lead));
        const Expr rhs = simplify(-substitute(r, {{lead.key(), Expr(0)}}) / coef);
        if (!coef.is_number()) {
            sys.constraints.push_back({coef, Relation::ne, Expr(0)});
        }
        EquationSystem single;
        single.space = rs;
        const Equation added{"reduced " + std::to_string(sys.equations.size() + 1), lead, rhs};
        single.equations = {added};
        for (auto& e : sys.equations) {
            e.rhs = restrict_to_manifold(e.rhs, single, {}, opts.order_cap);
        }
        sys.equations.push_back(added);
    }

    if (sys.equations.size() > a.unknowns.size()) {
        out.failure = "reduced system has " + std::to_string(sys.equations.size()) + " equations for " +
                      std::to_string(a.unknowns.size()) + " unknowns";
        return out;
    }
    out.verification = verify_reduction(a, original, sys, seed, opts);
    if (out.verification.verdict != Verdict::pass) {
        out.failure = "derived system does not verify (" + std::string(verdict_name(out.verification.verdict)) + ")";
        return out;
    }
    out.system = std::move(sys);
    return out;
}

// --- Backlund relations ----------------------------------------------------

CheckReport verify_backlund(const BacklundRelation& bt, std::uint64_t seed, const CheckOptions& opts)
{
    EquationSystem sys;
    sys.space = bt.space;
    for (const auto& [c, rhs] : bt.relations) {
        sys.equations.push_back({"relation " + c.key(), c, rhs});
    }
    sys.equations.insert(sys.equations.end(), bt.source.equations.begin(), bt.source.equations.end());

    std::vector<Expr> residuals;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < bt.relations.size(); ++i) {
        for (std::size_t j = i + 1; j < bt.relations.size(); ++j) {
            const auto& [a, ra] = bt.relations[i];
            const auto& [b, rb] = bt.relations[j];
            if (a.dependent != b.dependent) {
                continue;
            }
            const auto m = common_index(a, b);
            const Expr r = bt.space.total_derivative(ra, index_difference(m, a.index)) -
                           bt.space.total_derivative(rb, index_difference(m, b.index));
            residuals.push_back(restrict_to_manifold(r, sys, {}, opts.order_cap));
            labels.push_back("compatibility " + a.key() + "," + b.key());
        }
    }
    for (std::size_t i = 0; i < bt.target.equations.size(); ++i) {
        const auto& eq = bt.target.equations[i];
        residuals.push_back(restrict_to_manifold(eq.residual(), sys, {}, opts.order_cap));
        labels.push_back(eq.name.empty() ? "target " + std::to_string(i + 1) : eq.name);
    }
    SamplingSpec s = opts.sampling;
    for (const auto* cs : {&bt.constraints, &bt.source.constraints, &bt.target.constraints}) {
        s.constraints.insert(s.constraints.end(), cs->begin(), cs->end());
    }
    return judge(std::move(residuals), std::move(labels), s, seed, opts.zero);
}

// --- overdetermined first-order systems --------------------------------------

CheckReport check_overdetermined(const OverdeterminedSystem& sys, std::uint64_t seed, const CheckOptions& opts)
{
    const auto& as = sys.assignments;
    const std::size_t n = as.size();
    if (n == 0) {
        throw Error("overdetermined system has no assignments");
    }
    const std::string u = as.front().first.dependent;
    std::vector<std::string> dirs;
    for (const auto& [c, rhs] : as) {
        if (c.dependent != u || c.order() != 1) {
            throw Error("overdetermined system must assign first derivatives of one dependent variable");
        }
        dirs.push_back(c.index.front());
    }
    // Second derivatives along x_j: y_i = dR_i/dx_j + dR_i/du u_j + sum_k dR_i/dp_k y_k.
    Matrix m(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            m[i][k] = Expr(i == k ? 1 : 0) - diff(as[i].second, Expr::jet(as[k].first));
        }
    }
    std::map<std::pair<std::size_t, std::size_t>, Expr> second; // (i, j) -> d_j u_{x_i}
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<Expr> b(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Expr& r = as[i].second;
            b[i] = diff(r, Expr::symbol(dirs[j])) + diff(r, Expr::jet(u)) * Expr::jet(as[j].first);
        }
        auto y = solve_linear(m, b);
        if (!y) {
            throw SingularImplicitSystem("assignments cannot be differentiated: singular Jacobian");
        }
        for (std::size_t i = 0; i < n; ++i) {
            second[{i, j}] = (*y)[i];
        }
    }
    std::vector<Expr> residuals;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            residuals.push_back(second[{i, j}] - second[{j, i}]);
            labels.push_back("compatibility " + as[i].first.key() + "," + as[j].first.key());
        }
    }

    SamplingSpec s = opts.sampling;
    s.constraints.insert(s.constraints.end(), sys.constraints.begin(), sys.constraints.end());
    const Expr det = simplify(determinant(m));
    if (!det.is_number()) {
        s.constraints.push_back({det, Relation::ne, Expr(0)});
    }
    // Solve the assignments in an order where each depends only on itself and earlier ones.
    std::vector<bool> done(n, false);
    for (std::size_t round = 0; round < n; ++round) {
        bool progressed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) {
                continue;
            }
            bool ready = true;
            for (std::size_t k = 0; k < n; ++k) {
                if (k != i && !done[k] && depends_on(as[i].second, as[k].first.key())) {
                    ready = false;
                }
            }
            if (!ready) {
                continue;
            }
            ImplicitSymbol sym{as[i].first.key(), Expr::jet(as[i].first) - as[i].second, Expr(0), std::nullopt};
            if (auto it = sys.brackets.find(as[i].first.key()); it != sys.brackets.end()) {
                sym.bracket = it->second;
                sym.guess = (it->second.first + it->second.second) / 2;
            }
            s.implicit.push_back(std::move(sym));
            done[i] = true;
            progressed = true;
        }
        if (!progressed) {
            throw Error("mutually dependent implicit assignments are not supported");
        }
        if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) {
            break;
        }
    }
    return judge(std::move(residuals), std::move(labels), s, seed, opts.zero);
}

} // namespace symred
