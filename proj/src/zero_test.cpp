#include "symred/zero_test.hpp"

#include "symred/error.hpp"
#include "symred/roots.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace symred {

std::string_view verdict_name(ZeroVerdict v)
{
    switch (v) {
    case ZeroVerdict::zero: return "zero";
    case ZeroVerdict::nonzero: return "nonzero";
    case ZeroVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::string_view provenance_name(Provenance p)
{
    return p == Provenance::symbolic ? "symbolic" : "probabilistic";
}

double Rng::uniform(double lo, double hi)
{
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    // splitmix64 finalizer over the pair
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

FunctionInstance random_function_instance(const std::string& name, std::vector<std::string>& coefficient_keys)
{
    std::vector<Expr> a;
    for (int i = 0; i < 6; ++i) {
        std::string key = name + "#a" + std::to_string(i);
        coefficient_keys.push_back(key);
        a.push_back(Expr::symbol(key));
    }
    const std::string var = name + "#s";
    const Expr s = Expr::symbol(var);
    Expr body = a[0] + a[1] * s + a[2] * pow(s, 2) + a[3] * sin(a[4] * s + a[5]);
    return FunctionInstance::from_body(body, var);
}

bool constraint_holds(const DomainConstraint& c, Evaluator& ev)
{
    const double l = ev(c.lhs);
    const double r = ev(c.rhs);
    const double d = l - r;
    switch (c.relation) {
    case Relation::lt: return d < 0.0;
    case Relation::le: return d <= 0.0;
    case Relation::gt: return d > 0.0;
    case Relation::ge: return d >= 0.0;
    case Relation::ne: return std::fabs(d) > 1e-8 * (1.0 + std::fabs(l) + std::fabs(r));
    }
    return false;
}

namespace {

void collect(const Expr& e, std::set<std::string>& vars, std::set<std::string>& fns)
{
    for (const auto& v : free_variables(e)) {
        vars.insert(v.key());
    }
    for (const auto& f : function_names(e)) {
        fns.insert(f);
    }
}

} // namespace

PointSampler::PointSampler(const SamplingSpec& spec, std::span<const Expr> targets, std::uint64_t seed)
    : spec_(spec), binding_(spec.fixed), rng_(seed)
{
    std::set<std::string> vars;
    std::set<std::string> fns;
    for (const auto& e : targets) {
        collect(e, vars, fns);
    }
    for (const auto& c : spec.constraints) {
        collect(c.lhs, vars, fns);
        collect(c.rhs, vars, fns);
    }
    for (const auto& s : spec.implicit) {
        collect(s.residual, vars, fns);
        collect(s.guess, vars, fns);
        if (s.bracket) {
            collect(s.bracket->first, vars, fns);
            collect(s.bracket->second, vars, fns);
        }
    }
    for (const auto& [name, inst] : spec.fixed.functions) {
        for (int n = 0; n < 2; ++n) {
            if (auto body = inst.derivative(n)) {
                std::set<std::string> inner;
                collect(*body, inner, fns);
                inner.erase(inst.var());
                vars.insert(inner.begin(), inner.end());
                break;
            }
        }
    }
    for (const auto& f : fns) {
        if (binding_.functions.count(f) == 0) {
            binding_.functions.emplace(f, random_function_instance(f, coefficient_keys_));
        }
    }
    for (const auto& s : spec.implicit) {
        vars.erase(s.key);
    }
    for (const auto& v : vars) {
        if (spec.fixed.values.count(v) == 0 && v.find('#') == std::string::npos) {
            keys_.push_back(v);
        }
    }
}

bool PointSampler::next(Evaluator& ev, int& draws_left)
{
    while (draws_left > 0) {
        --draws_left;
        ev.clear();
        for (const auto& k : keys_) {
            auto it = spec_.ranges.find(k);
            const Range r = it == spec_.ranges.end() ? spec_.default_range : it->second;
            ev.set(k, rng_.uniform(r.lo, r.hi));
        }
        for (const auto& k : coefficient_keys_) {
            // frequency coefficient (a4) kept away from zero
            const bool freq = k.size() >= 3 && k.compare(k.size() - 3, 3, "#a4") == 0;
            ev.set(k, freq ? rng_.uniform(0.5, 2.0) : rng_.uniform(-1.0, 1.0));
        }
        try {
            for (const auto& s : spec_.implicit) {
                const double guess = ev(s.guess);
                std::optional<std::pair<double, double>> bracket;
                if (s.bracket) {
                    bracket = std::make_pair(ev(s.bracket->first), ev(s.bracket->second));
                }
                auto f = [&](double x) {
                    ev.set(s.key, x);
                    return ev(s.residual);
                };
                const RootResult root = find_root(f, guess, bracket);
                ev.set(s.key, root.x);
            }
            bool ok = true;
            for (const auto& c : spec_.constraints) {
                if (!constraint_holds(c, ev)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                return true;
            }
        } catch (const DomainFault&) {
        } catch (const NoConvergence&) {
        }
    }
    return false;
}

Point PointSampler::current_point(const Evaluator& ev) const
{
    Point p;
    for (const auto& [k, v] : ev.values()) {
        p[k] = v;
    }
    return p;
}

ZeroTestResult all_zero(std::span<const Expr> exprs, const SamplingSpec& spec, std::uint64_t seed,
                        const ZeroTestOptions& opts)
{
    ZeroTestResult res;
    std::vector<Expr> work;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < exprs.size(); ++i) {
        Expr s = simplify(exprs[i]);
        if (!s.is_zero()) {
            work.push_back(s);
            origin.push_back(i);
        }
    }
    if (work.empty()) {
        res.verdict = ZeroVerdict::zero;
        res.provenance = Provenance::symbolic;
        return res;
    }
    PointSampler sampler(spec, work, seed);
    Evaluator ev(&sampler.binding());
    int draws_left = opts.retry_budget;
    while (res.accepted_points < opts.points) {
        if (!sampler.next(ev, draws_left)) {
            res.verdict = ZeroVerdict::inconclusive;
            res.draws = opts.retry_budget - draws_left;
            res.note = "sampling budget exhausted after " + std::to_string(res.accepted_points) + " admissible points";
            return res;
        }
        std::vector<double> values;
        try {
            for (std::size_t i = 0; i < work.size(); ++i) {
                ev.reset_magnitude();
                const double v = ev(work[i]);
                const double threshold = opts.abs_tol + opts.rel_tol * ev.max_magnitude();
                values.push_back(v);
                if (std::fabs(v) > threshold) {
                    res.verdict = ZeroVerdict::nonzero;
                    res.provenance = Provenance::probabilistic;
                    res.witness = sampler.current_point(ev);
                    res.witness_value = v;
                    res.failing_index = origin[i];
                    res.residual_max = std::max(res.residual_max, std::fabs(v));
                    res.draws = opts.retry_budget - draws_left;
                    return res;
                }
            }
        } catch (const DomainFault&) {
            continue;
        }
        for (double v : values) {
            res.residual_max = std::max(res.residual_max, std::fabs(v));
        }
        ++res.accepted_points;
    }
    res.verdict = ZeroVerdict::zero;
    res.provenance = Provenance::probabilistic;
    res.draws = opts.retry_budget - draws_left;
    return res;
}

ZeroTestResult is_zero(const Expr& e, const SamplingSpec& spec, std::uint64_t seed, const ZeroTestOptions& opts)
{
    return all_zero(std::span<const Expr>(&e, 1), spec, seed, opts);
}

} // namespace symred
