#include "symred/symmetry.hpp"

#include "symred/error.hpp"

#include <algorithm>
#include <unordered_map>

namespace symred {

int EquationSystem::order() const
{
    int order = 0;
    for (const auto& eq : equations) {
        order = std::max({order, eq.lead.order(), space.order_of(eq.rhs)});
    }
    return order;
}

std::string_view verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

Expr restrict_to_manifold(const Expr& e, const EquationSystem& sys, const std::vector<Rewrite>& extra, int order_cap)
{
    std::vector<Rewrite> rules = extra;
    for (const auto& eq : sys.equations) {
        rules.emplace_back(eq.lead, eq.rhs);
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
        for (std::size_t j = i + 1; j < rules.size(); ++j) {
            if (rules[i].first == rules[j].first) {
                throw ConflictingConstraints("two rewrites for " + rules[i].first.key());
            }
        }
    }
    std::unordered_map<std::string, Expr> consequence;
    constexpr int kMaxPasses = 64;
    Expr current = e;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
        Substitution subs;
        for (const auto& c : sys.space.jet_coordinates(current)) {
            if (c.order() > order_cap) {
                throw IterationCapExceeded("coordinate " + c.key() + " exceeds order cap " + std::to_string(order_cap));
            }
            for (const auto& [lead, rhs] : rules) {
                auto rest = c.over(lead);
                if (!rest) {
                    continue;
                }
                auto it = consequence.find(c.key());
                if (it == consequence.end()) {
                    it = consequence.emplace(c.key(), sys.space.total_derivative(rhs, *rest)).first;
                }
                subs.emplace(c.key(), it->second);
                break;
            }
        }
        if (subs.empty()) {
            return simplify(current);
        }
        current = substitute(current, subs);
    }
    throw IterationCapExceeded("manifold restriction did not terminate");
}

CheckReport judge(std::vector<Expr> residuals, std::vector<std::string> labels, const SamplingSpec& sampling,
                  std::uint64_t seed, const ZeroTestOptions& zero)
{
    CheckReport report;
    report.seed = seed;
    report.tolerances = zero;
    const ZeroTestResult z = all_zero(residuals, sampling, seed, zero);
    report.residuals = std::move(residuals);
    report.labels = std::move(labels);
    report.provenance = z.provenance;
    report.residual_max = z.residual_max;
    report.note = z.note;
    switch (z.verdict) {
    case ZeroVerdict::zero:
        report.verdict = Verdict::pass;
        break;
    case ZeroVerdict::nonzero:
        report.verdict = Verdict::fail;
        report.witness = z.witness;
        report.witness_value = z.witness_value;
        if (z.failing_index < report.labels.size()) {
            report.failing = report.labels[z.failing_index];
        }
        break;
    case ZeroVerdict::inconclusive:
        report.verdict = Verdict::inconclusive;
        break;
    }
    return report;
}

namespace {

SamplingSpec with_constraints(const SamplingSpec& base, const std::vector<DomainConstraint>& extra)
{
    SamplingSpec s = base;
    s.constraints.insert(s.constraints.end(), extra.begin(), extra.end());
    return s;
}

std::string label_of(const Equation& eq, std::size_t i)
{
    return eq.name.empty() ? "equation " + std::to_string(i + 1) : eq.name;
}

CheckReport run_point_check(const VectorField& vf, const EquationSystem& sys, const std::vector<Rewrite>& extra,
                            std::vector<DomainConstraint> constraints, std::uint64_t seed, const CheckOptions& opts)
{
    const ProlongedField pf = prolong(vf, std::max(1, sys.order()), sys.space);
    std::vector<Expr> residuals;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < sys.equations.size(); ++i) {
        const Expr applied = apply_operator(pf, sys.equations[i].residual());
        residuals.push_back(restrict_to_manifold(applied, sys, extra, opts.order_cap));
        labels.push_back(label_of(sys.equations[i], i));
    }
    constraints.insert(constraints.end(), sys.constraints.begin(), sys.constraints.end());
    return judge(std::move(residuals), std::move(labels), with_constraints(opts.sampling, constraints), seed, opts.zero);
}

bool is_lead(const EquationSystem& sys, const JetCoord& c)
{
    return std::any_of(sys.equations.begin(), sys.equations.end(), [&](const Equation& eq) {
        return c.over(eq.lead).has_value();
    });
}

} // namespace

CheckReport check_classical(const VectorField& vf, const EquationSystem& sys, std::uint64_t seed,
                            const CheckOptions& opts)
{
    return run_point_check(vf, sys, {}, {}, seed, opts);
}

std::vector<Rewrite> invariant_surface_conditions(const VectorField& vf, const EquationSystem& sys)
{
    const auto& xs = sys.space.independents();
    std::vector<Rewrite> out;
    for (const auto& u : sys.space.dependents()) {
        // Pivot: a variable with nonzero xi whose derivative is not already a system lead,
        // preferring constant coefficients.
        std::optional<std::string> pivot;
        for (int pref = 0; pref < 2 && !pivot; ++pref) {
            for (const auto& x : xs) {
                const Expr xi = vf.xi_of(x);
                if (xi.is_zero() || (pref == 0 && !xi.is_number())) {
                    continue;
                }
                if (is_lead(sys, JetCoord(u, {x}))) {
                    continue;
                }
                pivot = x;
                break;
            }
        }
        if (!pivot) {
            throw Error("operator has no usable component to solve the invariant-surface condition for " + u);
        }
        std::vector<Expr> terms{vf.eta_of(u)};
        for (const auto& x : xs) {
            if (x != *pivot) {
                terms.push_back(-vf.xi_of(x) * Expr::jet(u, {x}));
            }
        }
        out.emplace_back(JetCoord(u, {*pivot}), make_sum(std::move(terms)) / vf.xi_of(*pivot));
    }
    return out;
}

CheckReport check_conditional(const VectorField& vf, const EquationSystem& sys, std::uint64_t seed,
                              const CheckOptions& opts)
{
    const auto extra = invariant_surface_conditions(vf, sys);
    std::vector<DomainConstraint> nonzero;
    for (const auto& [c, rhs] : extra) {
        const Expr xi = vf.xi_of(c.index.front());
        if (!xi.is_number()) {
            nonzero.push_back({xi, Relation::ne, Expr(0)});
        }
    }
    return run_point_check(vf, sys, extra, std::move(nonzero), seed, opts);
}

CheckReport check_lie_backlund(const CanonicalOperator& op, const EquationSystem& ode, std::uint64_t seed,
                               const CheckOptions& opts)
{
    if (ode.equations.size() != 1) {
        throw Error("Lie-Backlund check expects a single ordinary differential equation");
    }
    const JetCoord& lead = ode.equations.front().lead;
    if (lead.index.empty() || std::adjacent_find(lead.index.begin(), lead.index.end(), std::not_equal_to<>()) !=
                                  lead.index.end()) {
        throw Error("Lie-Backlund check expects a pure derivative in one variable as the leading term");
    }
    const Expr applied = apply_operator(op, ode.equations.front().residual(), ode.space);
    std::vector<Expr> residuals{restrict_to_manifold(applied, ode, {}, opts.order_cap)};
    return judge(std::move(residuals), {label_of(ode.equations.front(), 0)},
                 with_constraints(opts.sampling, ode.constraints), seed, opts.zero);
}

EquationSystem family_constraints(const std::vector<VectorField>& family, const EquationSystem& sys)
{
    EquationSystem out;
    out.space = sys.space;
    out.constraints = sys.constraints;
    for (std::size_t a = 0; a < family.size(); ++a) {
        const VectorField& q = family[a];
        for (const auto& u : sys.space.dependents()) {
            std::optional<std::string> pivot;
            for (const auto& x : sys.space.independents()) {
                const JetCoord c(u, {x});
                const bool taken = std::any_of(out.equations.begin(), out.equations.end(),
                                               [&](const Equation& eq) { return eq.lead == c; });
                if (!q.xi_of(x).is_zero() && !taken) {
                    pivot = x;
                    break;
                }
            }
            if (!pivot) {
                throw Error("family operator " + std::to_string(a + 1) + " yields no differential constraint");
            }
            std::vector<Expr> terms{q.eta_of(u)};
            for (const auto& x : sys.space.independents()) {
                if (x != *pivot) {
                    terms.push_back(-q.xi_of(x) * Expr::jet(u, {x}));
                }
            }
            out.equations.push_back({"constraint " + std::to_string(a + 1), JetCoord(u, {*pivot}),
                                     simplify(make_sum(std::move(terms)) / q.xi_of(*pivot))});
        }
    }
    return out;
}

NoveltyDiagnostic novelty_diagnostic(const std::vector<VectorField>& algebra, const std::vector<VectorField>& family,
                                     int t, const EquationSystem& sys, std::uint64_t seed, const CheckOptions& opts)
{
    NoveltyDiagnostic d;
    d.s = algebra.size();
    d.t = t;
    d.constraint_system = family_constraints(family, sys);
    d.assumptions.push_back("involutivity of the operator family is assumed, not verified");
    bool all_pass = true;
    for (std::size_t i = 0; i < algebra.size(); ++i) {
        d.constraint_verdicts.push_back(check_classical(algebra[i], d.constraint_system, derive_seed(seed, 2 * i), opts));
        d.equation_verdicts.push_back(check_classical(algebra[i], sys, derive_seed(seed, 2 * i + 1), opts));
        all_pass = all_pass && d.constraint_verdicts.back().verdict == Verdict::pass &&
                   d.equation_verdicts.back().verdict == Verdict::pass;
    }
    d.conclusion = all_pass && d.s >= static_cast<std::size_t>(t) + 1;
    return d;
}

} // namespace symred
