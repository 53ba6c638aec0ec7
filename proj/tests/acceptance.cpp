// One line per acceptance criterion; exits nonzero when any criterion fails.

#include "generators.hpp"

#include "symred/error.hpp"
#include "symred/eval.hpp"
#include "symred/problem.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

using namespace symred;
using symred::testing::ExprGenerator;
namespace fs = std::filesystem;

namespace {

const fs::path cases_dir = fs::path(SYMRED_SOURCE_DIR) / "cases";

ProblemBundle bundle(const char* name)
{
    return load_problem(cases_dir / (std::string(name) + ".prob"));
}

struct Outcome {
    bool ok = false;
    std::string detail;
};

int failures = 0;

void criterion(int n, const char* title, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.ok) ++failures;
    std::printf("%s criterion %2d  %s: %s [%.2f s]\n", o.ok ? "PASS" : "FAIL", n, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double seconds_of(const std::function<void()>& f)
{
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CheckOptions options(const ProblemBundle& b, const CheckSettings& s)
{
    CheckOptions o;
    o.sampling = sampling_for(b, s);
    return o;
}

/// Zero tolerance of the probabilistic test, pinned at 1e-9.
bool zero_residual(const CheckReport& r)
{
    return r.verdict == Verdict::pass && (r.provenance == Provenance::symbolic || r.residual_max < 1e-9);
}

Outcome classical_symmetry()
{
    const auto b = bundle("eq3");
    const auto& sys = b.equations.at("eq3");
    const auto& q = *b.operators.at("Q").point;
    const auto& d = *b.operators.at("D").point;
    const VectorField half = Expr(Rational(1, 2)) * (q + Expr(-1) * d);
    CheckReport r;
    const double t = seconds_of([&] { r = check_classical(half, sys, 0, options(b, {})); });
    const CheckReport listed = check_classical(*b.operators.at("halfQminusD").point, sys, 0, options(b, {}));
    return {zero_residual(r) && zero_residual(listed) && t < 1.0,
            "(Q - D)/2 " + std::string(verdict_name(r.verdict)) + ", residual " + fmt("%.2g", r.residual_max) +
                " over " + std::to_string(r.tolerances.points) + " points (< 1e-9), " + fmt("%.3f", t) + " s (< 1 s)"};
}

Outcome conditional_symmetry()
{
    const auto b = bundle("sg_deformed");
    const auto& sys = b.equations.at("corresponding");
    const auto& good = b.operators.at("Qcond");
    const auto& shifted = b.operators.at("QcondShifted");
    CheckReport r;
    CheckReport bad;
    const double t1 = seconds_of([&] { r = check_conditional(*good.point, sys, 0, options(b, good.settings)); });
    const double t2 = seconds_of([&] { bad = check_conditional(*shifted.point, sys, 0, options(b, shifted.settings)); });
    const bool ok = zero_residual(r) && bad.verdict == Verdict::fail && !bad.witness.empty() && t1 < 1.0 && t2 < 1.0;
    return {ok, "operator " + std::string(verdict_name(r.verdict)) + " (residual " + fmt("%.2g", r.residual_max) +
                    "), C1 = 1 variant " + std::string(verdict_name(bad.verdict)) + " with witness value " +
                    fmt("%.3g", bad.witness_value) + ", " + fmt("%.3f", t1) + " s and " + fmt("%.3f", t2) + " s (< 1 s)"};
}

Outcome lie_backlund()
{
    const auto b = bundle("ode32");
    const auto& ode = b.equations.at("eq32");
    std::string detail;
    bool ok = true;
    for (const char* name : {"Q1", "Q2", "Q2mutant"}) {
        const auto& op = b.operators.at(name);
        CheckReport r;
        const double t = seconds_of([&] { r = check_lie_backlund(*op.canonical, ode, 0, options(b, op.settings)); });
        const bool want_pass = op.settings.expect == Expectation::pass;
        ok = ok && t < 2.0 && (want_pass ? zero_residual(r) : r.verdict == Verdict::fail);
        detail += std::string(detail.empty() ? "" : ", ") + name + " " + std::string(verdict_name(r.verdict)) + " in " +
                  fmt("%.3f", t) + " s";
    }
    return {ok, detail + " (< 2 s each; F opaque)"};
}

/// Each system's residuals vanish on the other.
bool equivalent(const EquationSystem& a, const EquationSystem& b, const SamplingSpec& spec)
{
    for (const auto& [from, to] : {std::pair{&a, &b}, std::pair{&b, &a}}) {
        for (const auto& eq : from->equations) {
            if (is_zero(restrict_to_manifold(eq.residual(), *to), spec, 3).verdict != ZeroVerdict::zero) return false;
        }
    }
    return true;
}

Outcome reductions()
{
    struct Item {
        const char* bundle;
        const char* ansatz;
        const char* candidate;
        bool derive;
    };
    const Item items[] = {{"eq3", "derivativeAnsatz", "eq4", false},
                          {"sg_deformed", "eq16", "eq17", true},
                          {"ode32", "logAnsatz", "eq36", true}};
    bool ok = true;
    std::string detail;
    for (const auto& it : items) {
        const auto b = bundle(it.bundle);
        const auto& a = b.ansatze.at(it.ansatz);
        const auto& sys = b.equations.at(a.system);
        const auto& cand = b.reduced.at(it.candidate);
        CheckReport v;
        double t = seconds_of([&] { v = verify_reduction(a.ansatz, sys, cand.system, 0, options(b, cand.settings)); });
        bool item_ok = v.verdict == Verdict::pass && t < 5.0;
        std::string d = std::string(it.ansatz) + " verify " + std::string(verdict_name(v.verdict)) + " " + fmt("%.2f", t) + " s";
        if (it.derive) {
            Derivation der;
            const double td = seconds_of([&] { der = derive_reduction(a.ansatz, sys, 0, options(b, a.settings)); });
            SamplingSpec spec = sampling_for(b, a.settings);
            spec.constraints.insert(spec.constraints.end(), a.ansatz.constraints.begin(), a.ansatz.constraints.end());
            const bool eq = der.system && der.verification.verdict == Verdict::pass &&
                            verify_reduction(a.ansatz, sys, *der.system, 1, options(b, a.settings)).verdict == Verdict::pass &&
                            equivalent(*der.system, cand.system, spec);
            item_ok = item_ok && eq && td < 5.0;
            d += ", derived " + std::string(eq ? "equivalent" : "NOT equivalent") + " " + fmt("%.2f", td) + " s";
        }
        ok = ok && item_ok;
        detail += (detail.empty() ? "" : "; ") + d;
    }
    return {ok, detail + " (< 5 s each)"};
}

Outcome explicit_solutions()
{
    const auto b4 = bundle("eq4");
    const auto& eq5 = b4.solutions.at("eq5");
    const auto& sys4 = b4.equations.at(eq5.system);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> alpha(0.5, 2.0);
    std::uniform_real_distribution<double> c1(1.5, 3.0);
    double worst = 0.0;
    std::size_t points = 0;
    bool all_pass = true;
    for (int k = 0; k < 8; ++k) {
        ParameterBinding binding;
        binding.values = {{"alpha", alpha(rng)}, {"C1", c1(rng)}};
        SamplePlan plan;
        plan.box = {{"omega", eq5.plan.box.at("omega")}};
        plan.count = 8;
        plan.seed = static_cast<std::uint64_t>(k);
        const auto r = residual_explicit(eq5.form, sys4, plan, binding);
        worst = std::max(worst, r.max_residual);
        points += r.points.size();
        all_pass = all_pass && r.verdict == Verdict::pass;
    }

    const auto b = bundle("ode32");
    auto run = [&](const char* name) {
        const auto& s = b.solutions.at(name);
        SamplePlan plan = s.plan;
        plan.tolerance = std::nullopt;
        return residual_explicit(s.form, b.equations.at(s.system), plan, s.binding);
    };
    const auto quad = run("eq38");
    const auto unit = run("unitF");
    const bool ok = all_pass && points == 64 && worst < 1e-9 && quad.max_residual < 1e-8 && unit.max_residual < 1e-12 &&
                    !quad.points.empty() && !unit.points.empty();
    return {ok, "closed form " + fmt("%.2g", worst) + " over " + std::to_string(points) +
                    " points and 8 (alpha, C1) bindings (< 1e-9); quadrature-backed " + fmt("%.2g", quad.max_residual) +
                    " (< 1e-8); F = 1 " + fmt("%.2g", unit.max_residual) + " (< 1e-12)"};
}

Outcome implicit_solution()
{
    const auto b = bundle("eq6");
    const auto& good = b.solutions.at("implicitTheta");
    const auto& flipped = b.solutions.at("flippedTheta");
    const auto& sys = b.equations.at(good.system);
    SamplePlan plan = good.plan;
    plan.h = 1e-4;
    plan.tolerance = 1e-4;
    const auto r = residual_implicit(good.form, sys, plan, good.binding);
    const auto n = residual_implicit(flipped.form, sys, plan, flipped.binding);
    const double tried = static_cast<double>(r.points.size() + static_cast<std::size_t>(r.skipped));
    const double skip = tried > 0 ? r.skipped / tried : 1.0;
    const bool ok = r.verdict == Verdict::pass && r.max_residual < 1e-4 && r.points.size() + r.skipped == 25 &&
                    skip < 0.2 && n.max_residual >= 1e3 * 1e-4;
    return {ok, "5x5 grid residual " + fmt("%.2g", r.max_residual) + " (< 1e-4, h = 1e-4), skipped " +
                    fmt("%.0f%%", 100 * skip) + " (< 20%); sign-flipped control " + fmt("%.3g", n.max_residual) +
                    " = " + fmt("%.0f", n.max_residual / 1e-4) + "x tolerance (>= 1000x)"};
}

Outcome backlund()
{
    const auto b = bundle("sg_deformed");
    const auto& good = b.backlund.at("eq18");
    const auto& doubled = b.backlund.at("eq18doubled");
    CheckReport r;
    CheckReport m;
    const double t1 = seconds_of([&] { r = verify_backlund(good.relation, 0, options(b, good.settings)); });
    const double t2 = seconds_of([&] { m = verify_backlund(doubled.relation, 0, options(b, doubled.settings)); });
    const bool ok = zero_residual(r) && m.verdict == Verdict::fail && t1 < 2.0 && t2 < 2.0;
    return {ok, "relation " + std::string(verdict_name(r.verdict)) + " (compatibility and target residual " +
                    fmt("%.2g", r.residual_max) + "), 2k variant " + std::string(verdict_name(m.verdict)) + ", " +
                    fmt("%.3f", t1) + " s and " + fmt("%.3f", t2) + " s (< 2 s)"};
}

Outcome overdetermined()
{
    const auto b = bundle("eq2");
    const auto& e = b.overdetermined.at("solutionPair");
    const auto r = check_overdetermined(e.system, 0, options(b, e.settings));
    return {r.verdict == Verdict::pass, std::string(verdict_name(r.verdict)) + ", cross-derivative residual " +
                                            fmt("%.2g", r.residual_max) + " (< 1e-9)"};
}

Outcome novelty()
{
    const auto b = bundle("eq2");
    const auto& sys = b.equations.at("eq2");
    auto field = [&](const char* xi1, const char* xi2, const char* eta) {
        VectorField f;
        f.xi = {{"x1", parse_expression(xi1, b.ctx)}, {"x2", parse_expression(xi2, b.ctx)}};
        f.eta = {{"u", parse_expression(eta, b.ctx)}};
        return f;
    };
    // Family d/dx1 gives u_{x1} = 0; the reduced equation u_{x2x2} = 1/(1 - C) has t = 2 constants.
    const std::vector<VectorField> family{field("1", "0", "0")};
    const std::vector<VectorField> algebra{field("0", "1", "0"), field("0", "0", "1"), field("0", "0", "x2")};
    std::vector<VectorField> broken = algebra;
    broken[2] = field("0", "0", "x1");
    CheckOptions opts;
    opts.sampling.constraints = sys.constraints;
    bool ok = true;
    std::string seen;
    for (std::uint64_t seed = 0; seed <= 4; ++seed) {
        const auto yes = novelty_diagnostic(algebra, family, 2, sys, seed, opts);
        const auto no = novelty_diagnostic(broken, family, 2, sys, seed, opts);
        ok = ok && yes.conclusion && !no.conclusion && yes.s == 3;
        seen += std::string(yes.conclusion ? "T" : "F") + (no.conclusion ? "T" : "F");
    }
    return {ok, "s = 3, t = 2: constructed instance true, broken instance false; seeds 0-4 give " + seen};
}

std::optional<double> try_eval(const Expr& e, const Point& p)
{
    try {
        const double v = eval_numeric(e, p);
        return std::isfinite(v) ? std::optional(v) : std::nullopt;
    } catch (const DomainFault&) {
        return std::nullopt;
    }
}

/// Redraws until the expression evaluates at a sample point; literal zero divisors are undefined everywhere.
Expr defined_somewhere(ExprGenerator& gen)
{
    for (;;) {
        const auto g = gen(3);
        if (std::isfinite(g.oracle(gen.point()))) return g.expr;
    }
}

Outcome engine_properties()
{
    constexpr int kCases = 120;
    int bad_idempotent = 0;
    int bad_fd = 0;
    int fd_compared = 0;
    int bad_commute = 0;
    int bad_leibniz = 0;
    int bad_roundtrip = 0;
    int escaped = 0;

    ExprGenerator gen(2026);
    const ParseContext ctx = ExprGenerator::context();
    const Expr x1 = Expr::symbol("x1");
    for (int i = 0; i < kCases; ++i) {
        const auto g = gen(4);
        const Expr s = simplify(g.expr);
        if (!(simplify(s) == s)) ++bad_idempotent;
        if (!(parse_expression(print_expression(g.expr), ctx) == g.expr)) ++bad_roundtrip;

        const Expr d = diff(g.expr, x1);
        Point p = gen.point();
        const double h = 1e-6 * (1 + std::fabs(p["x1"]));
        Point lo = p;
        Point hi = p;
        lo["x1"] -= h;
        hi["x1"] += h;
        const double fl = g.oracle(lo);
        const double fh = g.oracle(hi);
        const auto dv = try_eval(d, p);
        if (dv && std::isfinite(fl) && std::isfinite(fh) && std::fabs(g.oracle(p)) < 1e4) {
            ++fd_compared;
            const double fd = (fh - fl) / (2 * h);
            if (std::fabs(*dv - fd) > 1e-6 * (1 + std::fabs(*dv))) ++bad_fd;
        }
    }

    // Jet expressions: the generator's parameter becomes u_{x1} and x2 is scaled by u.
    ParseContext jctx;
    jctx.add_independent("x1");
    jctx.add_independent("x2");
    jctx.add_dependent("u", {"x1", "x2"});
    const JetSpace js({"x1", "x2"}, {"u"});
    const Substitution to_jet{{"a", parse_expression("u[x1]", jctx)}, {"x2", parse_expression("x2*u", jctx)}};
    ExprGenerator jgen(2027);
    for (int i = 0; i < kCases; ++i) {
        const Expr f = substitute(defined_somewhere(jgen), to_jet);
        const Expr g = substitute(defined_somewhere(jgen), to_jet);
        const Expr commute = js.total_derivative(js.total_derivative(f, "x1"), "x2") -
                             js.total_derivative(js.total_derivative(f, "x2"), "x1");
        if (is_zero(commute, {}, static_cast<std::uint64_t>(i)).verdict != ZeroVerdict::zero) ++bad_commute;
        const Expr leibniz = js.total_derivative(f * g, "x2") -
                             (js.total_derivative(f, "x2") * g + f * js.total_derivative(g, "x2"));
        if (is_zero(leibniz, {}, static_cast<std::uint64_t>(i)).verdict != ZeroVerdict::zero) ++bad_leibniz;
    }

    std::mt19937_64 rng(2028);
    const std::string alphabet = "x12a+-*/^()[],.' eE0sincoexplnF\n";
    for (int i = 0; i < 1000; ++i) {
        std::string s;
        const int len = std::uniform_int_distribution<int>(0, 40)(rng);
        for (int k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
        try {
            (void)parse_expression(s, ctx);
        } catch (const SyntaxError&) {
        } catch (const UndeclaredSymbol&) {
        } catch (...) {
            ++escaped;
        }
    }

    const bool ok = bad_idempotent == 0 && bad_fd == 0 && fd_compared >= 100 && bad_commute == 0 && bad_leibniz == 0 &&
                    bad_roundtrip == 0 && escaped == 0;
    return {ok, "idempotence " + std::to_string(kCases - bad_idempotent) + "/" + std::to_string(kCases) +
                    ", diff vs FD " + std::to_string(fd_compared - bad_fd) + "/" + std::to_string(fd_compared) +
                    " (rel 1e-6), D1D2 = D2D1 " + std::to_string(kCases - bad_commute) + "/" + std::to_string(kCases) +
                    ", Leibniz " + std::to_string(kCases - bad_leibniz) + "/" + std::to_string(kCases) +
                    ", round trip " + std::to_string(kCases - bad_roundtrip) + "/" + std::to_string(kCases) +
                    ", fuzz escapes " + std::to_string(escaped) + "/1000"};
}

} // namespace

int main()
{
    const auto t0 = std::chrono::steady_clock::now();
    criterion(1, "classical symmetry", classical_symmetry);
    criterion(2, "conditional symmetry", conditional_symmetry);
    criterion(3, "Lie-Backlund symmetry", lie_backlund);
    criterion(4, "reductions", reductions);
    criterion(5, "explicit solutions", explicit_solutions);
    criterion(6, "implicit solution", implicit_solution);
    criterion(7, "Backlund transformation", backlund);
    criterion(8, "overdetermined compatibility", overdetermined);
    criterion(9, "novelty diagnostic", novelty);
    const auto t9 = std::chrono::steady_clock::now();
    criterion(10, "engine properties", engine_properties);
    const double t10 = std::chrono::duration<double>(std::chrono::steady_clock::now() - t9).count();
    if (t10 >= 60.0) {
        std::printf("FAIL criterion 10 took %.1f s (>= 60 s)\n", t10);
        ++failures;
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%d of 10 criteria failed, %.2f s total\n", failures, total);
    return failures == 0 ? 0 : 1;
}
