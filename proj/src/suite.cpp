#include "symred/suite.hpp"

#include "symred/error.hpp"

namespace symred {

bool CheckResult::as_expected() const
{
    if (verdict == Verdict::inconclusive) return false;
    return (verdict == Verdict::pass) == (expected == Expectation::pass);
}

std::string format_system(const EquationSystem& sys)
{
    std::string out;
    for (const auto& eq : sys.equations) {
        out += eq.lead.key() + " = " + print_expression(eq.rhs) + "\n";
    }
    return out;
}

namespace {

template <class Map>
const auto& lookup(const Map& m, const std::string& name, const char* what)
{
    auto it = m.find(name);
    if (it == m.end()) throw UsageError(std::string("unknown ") + what + " '" + name + "'");
    return it->second;
}

CheckOptions options_for(const ProblemBundle& b, const CheckSettings& s, const RunOverrides& o)
{
    CheckOptions opts;
    opts.sampling = sampling_for(b, s);
    if (o.tolerance) {
        opts.zero.abs_tol = *o.tolerance;
        opts.zero.rel_tol = *o.tolerance;
    }
    return opts;
}

CheckResult from_report(const CheckReport& r, const CheckOptions& opts, std::uint64_t seed)
{
    CheckResult c;
    c.verdict = r.verdict;
    c.residual_max = r.residual_max;
    c.seed = seed;
    c.tolerances = {{"abs", opts.zero.abs_tol}, {"rel", opts.zero.rel_tol}, {"points", opts.zero.points}};
    c.provenance = std::string(provenance_name(r.provenance));
    c.witness = r.witness;
    c.failing = r.failing;
    c.note = r.note;
    return c;
}

/// Engine errors inside a check make it inconclusive; naming errors stay fatal.
template <class F>
CheckResult guarded(const char* kind, const std::string& name, std::uint64_t seed, F&& f)
{
    try {
        return f();
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        CheckResult c;
        c.kind = kind;
        c.name = name;
        c.seed = seed;
        c.note = e.what();
        return c;
    }
}

} // namespace

CheckResult run_operator(const ProblemBundle& b, const std::string& name, std::uint64_t seed, const RunOverrides& o)
{
    return guarded("operator", name, seed, [&] {
        const auto& op = lookup(b.operators, name, "operator");
        const auto& sys = lookup(b.equations, op.system, "equation");
        const CheckMode mode = o.mode.value_or(op.mode);
        const CheckOptions opts = options_for(b, op.settings, o);
        CheckReport r;
        if (mode == CheckMode::lie_backlund) {
            if (!op.canonical) throw UsageError("operator '" + name + "' is a point operator; lb mode needs a canonical one");
            r = check_lie_backlund(*op.canonical, sys, seed, opts);
        } else {
            if (!op.point) throw UsageError("operator '" + name + "' is canonical; use --mode lb");
            r = mode == CheckMode::classical ? check_classical(*op.point, sys, seed, opts)
                                             : check_conditional(*op.point, sys, seed, opts);
        }
        CheckResult c = from_report(r, opts, seed);
        c.kind = std::string(mode_name(mode));
        c.name = name;
        c.expected = op.settings.expect;
        return c;
    });
}

CheckResult run_reduction(const ProblemBundle& b, const std::string& ansatz, const std::optional<std::string>& candidate,
                          std::uint64_t seed, const RunOverrides& o)
{
    return guarded("reduction", ansatz, seed, [&] {
        const auto& a = lookup(b.ansatze, ansatz, "ansatz");
        const auto& sys = lookup(b.equations, a.system, "equation");
        if (candidate) {
            const auto& red = lookup(b.reduced, *candidate, "reduced system");
            if (red.ansatz != ansatz) {
                throw UsageError("reduced system '" + *candidate + "' belongs to ansatz '" + red.ansatz + "'");
            }
            const CheckOptions opts = options_for(b, red.settings, o);
            CheckResult c = from_report(verify_reduction(a.ansatz, sys, red.system, seed, opts), opts, seed);
            c.kind = "reduction";
            c.name = *candidate;
            c.expected = red.settings.expect;
            return c;
        }
        const CheckOptions opts = options_for(b, a.settings, o);
        const Derivation d = derive_reduction(a.ansatz, sys, seed, opts);
        CheckResult c = from_report(d.verification, opts, seed);
        c.kind = "derivation";
        c.name = ansatz;
        c.expected = a.derive.value_or(Expectation::pass);
        c.assumptions = d.assumptions;
        if (d.system) {
            c.derived = format_system(*d.system);
        } else {
            c.verdict = Verdict::fail;
            c.note = d.failure;
        }
        return c;
    });
}

CheckResult run_solution(const ProblemBundle& b, const std::string& name, std::uint64_t seed, const RunOverrides& o)
{
    return guarded("solution", name, seed, [&] {
        const auto& e = lookup(b.solutions, name, "solution");
        const auto& sys = lookup(b.equations, e.system, "equation");
        SolutionForm form = e.form;
        form.constraints.insert(form.constraints.end(), b.constraints.begin(), b.constraints.end());
        SamplePlan plan = e.plan;
        plan.seed = seed;
        if (o.tolerance) plan.tolerance = *o.tolerance;
        const bool fd = e.finite_differences || o.finite_differences;
        const ResidualReport r = fd ? residual_implicit(form, sys, plan, e.binding) : residual_explicit(form, sys, plan, e.binding);
        CheckResult c;
        c.kind = "solution";
        c.name = name;
        c.expected = e.settings.expect;
        c.verdict = r.verdict;
        c.residual_max = r.max_residual;
        c.seed = seed;
        c.tolerances = {{"residual", r.tolerance}};
        if (fd) c.tolerances.emplace_back("h", plan.h);
        c.provenance = r.method;
        c.witness = r.witness;
        c.note = r.note;
        if (r.note.empty()) {
            c.note = std::to_string(r.points.size()) + " points, " + std::to_string(r.skipped) + " skipped";
        }
        if (fd) c.note += "; finite differences widen the tolerance to O(h^2)";
        return c;
    });
}

CheckResult run_backlund(const ProblemBundle& b, const std::string& name, std::uint64_t seed, const RunOverrides& o)
{
    return guarded("backlund", name, seed, [&] {
        const auto& e = lookup(b.backlund, name, "backlund relation");
        const CheckOptions opts = options_for(b, e.settings, o);
        CheckResult c = from_report(verify_backlund(e.relation, seed, opts), opts, seed);
        c.kind = "backlund";
        c.name = name;
        c.expected = e.settings.expect;
        return c;
    });
}

CheckResult run_overdetermined(const ProblemBundle& b, const std::string& name, std::uint64_t seed,
                               const RunOverrides& o)
{
    return guarded("overdetermined", name, seed, [&] {
        const auto& e = lookup(b.overdetermined, name, "overdetermined system");
        const CheckOptions opts = options_for(b, e.settings, o);
        CheckResult c = from_report(check_overdetermined(e.system, seed, opts), opts, seed);
        c.kind = "overdetermined";
        c.name = name;
        c.expected = e.settings.expect;
        return c;
    });
}

std::vector<CheckResult> run_bundle(const ProblemBundle& b, const std::string& case_name, std::uint64_t seed,
                                    const RunOverrides& o)
{
    std::vector<CheckResult> out;
    for (const auto& ref : b.sections) {
        std::optional<CheckResult> r;
        if (ref.kind == "operator") {
            r = run_operator(b, ref.name, seed, o);
        } else if (ref.kind == "ansatz") {
            if (b.ansatze.at(ref.name).derive) r = run_reduction(b, ref.name, std::nullopt, seed, o);
        } else if (ref.kind == "reduced") {
            r = run_reduction(b, b.reduced.at(ref.name).ansatz, ref.name, seed, o);
        } else if (ref.kind == "solution") {
            r = run_solution(b, ref.name, seed, o);
        } else if (ref.kind == "backlund") {
            r = run_backlund(b, ref.name, seed, o);
        } else if (ref.kind == "overdetermined") {
            r = run_overdetermined(b, ref.name, seed, o);
        }
        if (r) {
            r->case_name = case_name;
            out.push_back(std::move(*r));
        }
    }
    return out;
}

} // namespace symred
