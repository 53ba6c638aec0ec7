#pragma once

// Systems shared by the jet, symmetry and reduction suites, built directly
// from text so the tests do not depend on the problem-file loader.

#include "symred/parser.hpp"
#include "symred/reduction.hpp"
#include "symred/symmetry.hpp"

#include <string>

namespace symred::testing {

/// Text parser bound to a context.
struct Lang {
    ParseContext ctx;

    Expr operator()(const std::string& text) const { return parse_expression(text, ctx); }

    Equation eq(const std::string& name, const std::string& text) const
    {
        auto [lhs, rhs] = parse_equation(text, ctx);
        return {name, lhs.jet_coord(), rhs};
    }
};

/// v1 = u_{x1}, v2 = u_{x2} for u_{x2x2} = 1/(exp(u_{x1}) - C).
struct CorrespondingSystem {
    Lang L;
    EquationSystem sys;

    CorrespondingSystem()
    {
        L.ctx.add_independent("x1");
        L.ctx.add_independent("x2");
        L.ctx.add_dependent("v1", {"x1", "x2"});
        L.ctx.add_dependent("v2", {"x1", "x2"});
        L.ctx.add_parameter("C");
        sys.space = JetSpace({"x1", "x2"}, {"v1", "v2"});
        sys.equations = {L.eq("compatibility", "v1[x2] = v2[x1]"), L.eq("reduced", "v2[x2] = 1/(exp(v1) - C)")};
        sys.constraints = {parse_constraint("exp(v1) - C != 0", L.ctx)};
    }

    VectorField D() const
    {
        VectorField f;
        f.xi = {{"x1", L("2*x1")}, {"x2", L("x2")}};
        f.eta = {{"v2", L("v2")}};
        return f;
    }

    VectorField Q() const
    {
        VectorField f;
        f.xi = {{"x2", L("x2 + 2*C*v2")}};
        f.eta = {{"v1", Expr(2)}, {"v2", L("-v2")}};
        return f;
    }
};

/// Promoted system for u_{x1x2} = sqrt(1 - k^2 u_{x2}^2) sin u with x3 = u.
struct PromotedWaveSystem {
    Lang L;
    EquationSystem sys;

    PromotedWaveSystem()
    {
        for (const char* x : {"x1", "x2", "x3"}) {
            L.ctx.add_independent(x);
        }
        L.ctx.add_dependent("v1", {"x1", "x2", "x3"});
        L.ctx.add_dependent("v2", {"x1", "x2", "x3"});
        for (const char* p : {"k", "C", "C1", "C2"}) {
            L.ctx.add_parameter(p);
        }
        sys.space = JetSpace::promoted({"x1", "x2"}, "x3", {"v1", "v2"});
        sys.equations = {L.eq("compatibility", "v1[x2] = v2[x1] + v2[x3]*v1 - v1[x3]*v2"),
                         L.eq("wave", "v2[x1] = sqrt(1 - k^2*v2^2)*sin(x3) - v2[x3]*v1")};
        sys.constraints = {parse_constraint("k^2*v2^2 < 1", L.ctx), parse_constraint("k != 0", L.ctx)};
    }

    VectorField conditional(const std::string& eta1, const std::string& eta2) const
    {
        VectorField f;
        f.xi = {{"x3", Expr(1)}};
        f.eta = {{"v1", L(eta1)}, {"v2", L(eta2)}};
        return f;
    }
};

/// u_{x1x1} = -u_{x1}^2 with u = u(x1, x2).
struct LiouvilleOde {
    Lang L;
    EquationSystem sys;

    LiouvilleOde()
    {
        L.ctx.add_independent("x1");
        L.ctx.add_independent("x2");
        L.ctx.add_dependent("u", {"x1", "x2"});
        L.ctx.add_function("F");
        sys.space = JetSpace({"x1", "x2"}, {"u"});
        sys.equations = {L.eq("ode", "u[x1,x1] = -u[x1]^2")};
    }

    CanonicalOperator op(const std::string& u) const { return {{{"u", L(u)}}}; }
};

/// Derivative ansatz v1 = phi1 - ln(x1 phi2), v2 = x1 phi2, omega = C v2 + x2
/// on the corresponding system, with the reduced system in solved form.
struct DerivativeAnsatzCase : CorrespondingSystem {
    Ansatz ansatz;
    ReducedSystem candidate;

    DerivativeAnsatzCase()
    {
        L.ctx.add_independent("omega");
        L.ctx.add_dependent("phi1", {"omega"});
        L.ctx.add_dependent("phi2", {"omega"});
        ansatz.reduced = {"omega"};
        ansatz.unknowns = {"phi1", "phi2"};
        ansatz.targets = {{JetCoord("v1"), L("phi1 - ln(x1*phi2)")}, {JetCoord("v2"), L("x1*phi2")}};
        ansatz.where = {{"omega", L("C*v2 + x2")}};
        ansatz.constraints = {parse_constraint("x1*phi2 > 0", L.ctx)};
        ansatz.assume_positive = true;
        candidate.space = reduced_space(ansatz);
        candidate.equations = {L.eq("first", "phi2[omega] = phi2*exp(-phi1)"),
                               L.eq("second", "phi1[omega] = phi2 + exp(-phi1)")};
    }
};

/// u_{x1x2} = sqrt(1 - k^2 u_{x2}^2) sin u with the first-order ansatz
/// u_{x1} = phi2 + k sin u, u_{x2} = sin(u - phi1)/k.
struct WaveAnsatzCase {
    Lang L;
    EquationSystem sys;
    Ansatz ansatz;
    ReducedSystem candidate;

    WaveAnsatzCase()
    {
        L.ctx.add_independent("x1");
        L.ctx.add_independent("x2");
        L.ctx.add_dependent("u", {"x1", "x2"});
        L.ctx.add_dependent("w", {"x1", "x2"});
        L.ctx.add_dependent("phi1", {"x1", "x2"});
        L.ctx.add_dependent("phi2", {"x1", "x2"});
        L.ctx.add_parameter("k");
        sys.space = JetSpace({"x1", "x2"}, {"u"});
        sys.equations = {L.eq("wave", "u[x1,x2] = sqrt(1 - k^2*u[x2]^2)*sin(u)")};
        sys.constraints = {parse_constraint("k^2*u[x2]^2 < 1", L.ctx), parse_constraint("k != 0", L.ctx)};
        ansatz.reduced = {"x1", "x2"};
        ansatz.unknowns = {"phi1", "phi2"};
        ansatz.targets = {{JetCoord("u", {"x1"}), L("phi2 + k*sin(u)")},
                          {JetCoord("u", {"x2"}), L("sin(u - phi1)/k")}};
        ansatz.constraints = {parse_constraint("cos(u - phi1) >= 0", L.ctx)};
        candidate.space = reduced_space(ansatz);
        candidate.equations = {L.eq("first", "phi2[x2] = sin(phi1)"), L.eq("second", "phi1[x1] = phi2")};
    }

    BacklundRelation backlund(const std::string& k_in_second = "k") const
    {
        BacklundRelation bt;
        bt.space = JetSpace({"x1", "x2"}, {"u", "w"});
        bt.relations = {{JetCoord("u", {"x2"}), L("sin(u - w)/(" + k_in_second + ")")},
                        {JetCoord("u", {"x1"}), L("w[x1] + k*sin(u)")}};
        bt.source.space = bt.space;
        bt.source.equations = {L.eq("sine-Gordon", "w[x1,x2] = sin(w)")};
        bt.target = sys;
        bt.target.space = bt.space;
        bt.constraints = {parse_constraint("cos(u - w) >= 0", L.ctx), parse_constraint("k != 0", L.ctx)};
        return bt;
    }
};

/// u_{x1x2} = u_{x1}^2 F(u + ln u_{x1}) with u = ln(x1 + phi1(x2)) + phi2(x2).
struct LogAnsatzCase {
    Lang L;
    EquationSystem sys;
    Ansatz ansatz;
    ReducedSystem candidate;

    LogAnsatzCase(const std::string& reduced_rhs = "-F(phi2)")
    {
        L.ctx.add_independent("x1");
        L.ctx.add_independent("x2");
        L.ctx.add_dependent("u", {"x1", "x2"});
        L.ctx.add_dependent("phi1", {"x2"});
        L.ctx.add_dependent("phi2", {"x2"});
        L.ctx.add_function("F");
        sys.space = JetSpace({"x1", "x2"}, {"u"});
        sys.equations = {L.eq("hyperbolic", "u[x1,x2] = u[x1]^2*F(u + ln(u[x1]))")};
        sys.constraints = {parse_constraint("u[x1] > 0", L.ctx)};
        ansatz.reduced = {"x2"};
        ansatz.unknowns = {"phi1", "phi2"};
        ansatz.targets = {{JetCoord("u"), L("ln(x1 + phi1) + phi2")}};
        ansatz.constraints = {parse_constraint("x1 + phi1 > 0", L.ctx)};
        ansatz.assume_positive = true;
        candidate.space = reduced_space(ansatz);
        candidate.equations = {L.eq("reduced", "phi1[x2] = " + reduced_rhs)};
    }
};

} // namespace symred::testing
