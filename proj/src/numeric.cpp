#include "symred/numeric.hpp"

#include "symred/error.hpp"
#include "symred/roots.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <mutex>

namespace symred {

QuadratureResult quadrature(const Expr& integrand, const std::string& var, double a, double b,
                            const ParameterBinding& binding, double tol)
{
    Evaluator ev(&binding);
    auto f = [&](double s) {
        ev.set(var, s);
        return ev(integrand);
    };
    QuadratureResult r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 14, 1e-13, &r.error);
    if (!(r.error <= tol)) {
        throw ToleranceNotMet("quadrature error estimate " + std::to_string(r.error) + " exceeds " + std::to_string(tol));
    }
    return r;
}

double solve_implicit(const Expr& res, const std::string& unknown, const Point& point, const ParameterBinding& binding,
                      double guess, std::optional<std::pair<double, double>> bracket)
{
    Evaluator ev(&binding);
    ev.set(point);
    auto f = [&](double v) {
        ev.set(unknown, v);
        return ev(res);
    };
    return find_root(f, guess, bracket).x;
}

ParameterBinding with_quadratures(const SolutionForm& sol, const ParameterBinding& binding)
{
    ParameterBinding out = binding;
    for (const auto& q : sol.quadratures) {
        // Antiderivative samples are reused when stencils revisit an upper limit.
        struct Cache {
            std::mutex mutex;
            std::map<double, double> values;
        };
        auto cache = std::make_shared<Cache>();
        auto base = std::make_shared<ParameterBinding>(binding);
        auto value = [q, cache, base](double x) {
            {
                std::lock_guard lock(cache->mutex);
                if (auto it = cache->values.find(x); it != cache->values.end()) {
                    return it->second;
                }
            }
            const double v = quadrature(q.integrand, q.var, q.lower, x, *base).value;
            std::lock_guard lock(cache->mutex);
            cache->values.emplace(x, v);
            return v;
        };
        out.functions.insert_or_assign(q.function, FunctionInstance::antiderivative(q.integrand, q.var, value));
    }
    return out;
}

namespace {

std::vector<Expr> jets_of(const EquationSystem& eq, const Expr& e)
{
    std::vector<Expr> out;
    for (const auto& c : eq.space.jet_coordinates(e)) {
        out.push_back(Expr::jet(c));
    }
    return out;
}

const Expr& value_of(const SolutionForm& sol, const std::string& dependent)
{
    auto it = sol.values.find(dependent);
    if (it == sol.values.end()) {
        throw Error("solution gives no value for " + dependent);
    }
    return it->second;
}

/// Solution substituted into an expression using exact derivatives.
Expr substitute_solution(const Expr& e, const SolutionForm& sol, const EquationSystem& eq)
{
    Substitution s;
    for (const auto& c : eq.space.jet_coordinates(e)) {
        Expr v = value_of(sol, c.dependent);
        for (const auto& x : c.index) {
            v = diff(v, Expr::symbol(x));
        }
        s.emplace(c.key(), v);
    }
    return substitute(e, s);
}

/// Independents join the sampled symbols even when the residual does not mention them.
std::vector<Expr> with_independents(std::vector<Expr> targets, const EquationSystem& eq)
{
    for (const auto& x : eq.space.independents()) {
        targets.push_back(Expr::symbol(x));
    }
    return targets;
}

SamplingSpec plan_sampling(const SamplePlan& plan, const SolutionForm& sol, const ParameterBinding& binding)
{
    SamplingSpec s;
    s.ranges = plan.box;
    s.fixed = binding;
    s.constraints = sol.constraints;
    s.implicit = sol.implicit;
    return s;
}

void finish(ResidualReport& r, int accepted)
{
    const int tried = accepted + r.skipped;
    if (accepted == 0) {
        r.verdict = Verdict::inconclusive;
        r.note = "no admissible sample points";
    } else if (r.skipped * 5 > tried) {
        r.verdict = Verdict::inconclusive;
        r.note = std::to_string(r.skipped) + " of " + std::to_string(tried) + " points skipped";
    } else {
        r.verdict = r.max_residual <= r.tolerance ? Verdict::pass : Verdict::fail;
    }
    if (r.verdict != Verdict::fail) {
        r.witness.clear();
    }
}

void record(ResidualReport& r, PointResidual pr)
{
    for (double v : pr.residuals) {
        if (std::fabs(v) > r.max_residual || std::isnan(v)) {
            r.max_residual = std::isnan(v) ? INFINITY : std::fabs(v);
            r.witness = pr.point;
        }
    }
    r.points.push_back(std::move(pr));
}

/// Runs `at_point` on each sample point; points whose evaluation faults are skipped and counted.
template <class F>
void sample_points(const SamplingSpec& spec, const std::vector<Expr>& targets, const SamplePlan& plan,
                   ResidualReport& r, F&& at_point)
{
    int accepted = 0;
    auto visit = [&](PointSampler& sampler, Evaluator& ev) {
        PointResidual pr{sampler.current_point(ev), {}};
        try {
            at_point(ev, sampler.binding(), pr);
        } catch (const NoConvergence&) {
            ++r.skipped;
            return;
        } catch (const DomainFault&) {
            ++r.skipped;
            return;
        }
        record(r, std::move(pr));
        ++accepted;
    };
    if (plan.grid.empty()) {
        PointSampler sampler(spec, targets, plan.seed);
        Evaluator ev(&sampler.binding());
        int draws_left = plan.retry_budget;
        while (accepted < plan.count && sampler.next(ev, draws_left)) {
            visit(sampler, ev);
        }
        r.draws = plan.retry_budget - draws_left;
    } else {
        // Grid variables get degenerate ranges; everything else is drawn per node.
        std::size_t nodes = 1;
        for (const auto& [x, n] : plan.grid) {
            nodes *= static_cast<std::size_t>(std::max(n, 1));
        }
        for (std::size_t node = 0; node < nodes; ++node) {
            SamplingSpec at = spec;
            std::size_t rest = node;
            for (const auto& [x, n] : plan.grid) {
                const Range box = plan.box.count(x) != 0 ? plan.box.at(x) : spec.default_range;
                const std::size_t i = rest % static_cast<std::size_t>(n);
                rest /= static_cast<std::size_t>(n);
                const double v = n > 1 ? box.lo + (box.hi - box.lo) * static_cast<double>(i) / (n - 1) : box.lo;
                at.ranges[x] = {v, v};
            }
            PointSampler sampler(at, targets, derive_seed(plan.seed, node));
            Evaluator ev(&sampler.binding());
            int draws_left = plan.retry_budget;
            if (sampler.next(ev, draws_left)) {
                visit(sampler, ev);
            } else {
                ++r.skipped;
            }
            r.draws += plan.retry_budget - draws_left;
        }
    }
    finish(r, accepted);
}

} // namespace

ResidualReport residual_explicit(const SolutionForm& sol, const EquationSystem& eq, const SamplePlan& plan,
                                 const ParameterBinding& binding)
{
    if (sol.kind == SolutionKind::implicit_form) {
        throw Error("residual_explicit needs an explicit or quadrature-backed solution");
    }
    const ParameterBinding full = with_quadratures(sol, binding);
    std::vector<Expr> residuals;
    for (const auto& e : eq.equations) {
        residuals.push_back(simplify(substitute_solution(e.residual(), sol, eq)));
    }
    SamplingSpec spec = plan_sampling(plan, sol, full);
    const auto targets = with_independents(residuals, eq);
    for (const auto& c : eq.constraints) {
        spec.constraints.push_back({substitute_solution(c.lhs, sol, eq), c.relation, substitute_solution(c.rhs, sol, eq)});
    }
    ResidualReport r;
    r.method = "symbolic";
    r.tolerance = plan.tolerance.value_or(1e-9);
    sample_points(spec, targets, plan, r, [&](Evaluator& ev, const ParameterBinding&, PointResidual& pr) {
        for (const auto& e : residuals) {
            pr.residuals.push_back(ev(e));
        }
    });
    return r;
}

namespace {

/// Dependent values of an implicit solution at shifted copies of one point.
class StencilEvaluator {
public:
    StencilEvaluator(const SolutionForm& sol, const ParameterBinding& binding, const Evaluator& center)
        : sol_(sol), binding_(binding), center_(center.values())
    {
        for (const auto& s : sol.implicit) {
            guesses_[s.key] = center_.at(s.key);
        }
    }

    double value(const std::string& dependent, const std::map<std::string, double>& shift)
    {
        Evaluator ev(&binding_);
        for (const auto& [k, v] : center_) {
            ev.set(k, v);
        }
        for (const auto& [x, dx] : shift) {
            ev.set(x, center_.at(x) + dx);
        }
        for (const auto& s : sol_.implicit) {
            std::optional<std::pair<double, double>> bracket;
            if (s.bracket) {
                bracket = std::pair{ev(s.bracket->first), ev(s.bracket->second)};
            }
            auto f = [&](double v) {
                ev.set(s.key, v);
                return ev(s.residual);
            };
            ev.set(s.key, find_root(f, guesses_.at(s.key), bracket).x);
        }
        return ev(value_of(sol_, dependent));
    }

private:
    const SolutionForm& sol_;
    const ParameterBinding& binding_;
    std::unordered_map<std::string, double> center_;
    std::map<std::string, double> guesses_;
};

double finite_difference(StencilEvaluator& st, const JetCoord& c, double h)
{
    auto f = [&](std::map<std::string, double> shift) { return st.value(c.dependent, shift); };
    switch (c.order()) {
    case 0:
        return f({});
    case 1: {
        const auto& x = c.index[0];
        return (f({{x, h}}) - f({{x, -h}})) / (2 * h);
    }
    case 2: {
        const auto& x = c.index[0];
        const auto& y = c.index[1];
        if (x == y) {
            return (-f({{x, 2 * h}}) + 16 * f({{x, h}}) - 30 * f({}) + 16 * f({{x, -h}}) - f({{x, -2 * h}})) /
                   (12 * h * h);
        }
        return (f({{x, h}, {y, h}}) - f({{x, h}, {y, -h}}) - f({{x, -h}, {y, h}}) + f({{x, -h}, {y, -h}})) /
               (4 * h * h);
    }
    default:
        throw Error("finite differences support derivatives up to order 2, not " + c.key());
    }
}

} // namespace

ResidualReport residual_implicit(const SolutionForm& sol, const EquationSystem& eq, const SamplePlan& plan,
                                 const ParameterBinding& binding)
{
    const ParameterBinding full = with_quadratures(sol, binding);
    std::vector<Expr> residuals;
    std::vector<Expr> targets;
    for (const auto& e : eq.equations) {
        residuals.push_back(e.residual());
        targets.push_back(substitute_solution(e.residual(), sol, eq));
    }
    for (const auto& [d, v] : sol.values) {
        targets.push_back(v);
    }
    targets = with_independents(targets, eq);
    const SamplingSpec spec = plan_sampling(plan, sol, full);

    ResidualReport r;
    r.method = "finite-difference";
    r.tolerance = plan.tolerance.value_or(1e-4);
    sample_points(spec, targets, plan, r, [&](Evaluator& ev, const ParameterBinding& b, PointResidual& pr) {
        StencilEvaluator st(sol, b, ev);
        Evaluator at(&b);
        for (const auto& [k, v] : ev.values()) {
            at.set(k, v);
        }
        for (const auto& e : residuals) {
            for (const auto& j : jets_of(eq, e)) {
                at.set(j.key(), finite_difference(st, j.jet_coord(), plan.h));
            }
            pr.residuals.push_back(at(e));
        }
    });
    return r;
}

} // namespace symred
