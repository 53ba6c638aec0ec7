#include "symred/error.hpp"
#include "symred/eval.hpp"
#include "symred/parser.hpp"
#include "symred/zero_test.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace symred;

namespace {

ParseContext plane_context()
{
    ParseContext ctx;
    ctx.add_independent("x1");
    ctx.add_independent("x2");
    ctx.add_dependent("u", {"x1", "x2"});
    ctx.add_parameter("C");
    ctx.add_parameter("k");
    ctx.add_parameter("v1");
    ctx.add_parameter("v2");
    ctx.add_parameter("x3");
    ctx.add_parameter("a");
    ctx.add_parameter("b");
    ctx.add_function("F");
    return ctx;
}

Expr P(const std::string& text)
{
    static const ParseContext ctx = plane_context();
    return parse_expression(text, ctx);
}

} // namespace

TEST(Simplify, AdditiveIdentity)
{
    EXPECT_EQ(simplify(P("x1 + 0")), P("x1"));
    EXPECT_EQ(print_expression(P("x1 + 0")), "x1");
}

TEST(Simplify, ExpOfLnIsKept)
{
    const Expr e = P("exp(ln(x1))");
    EXPECT_EQ(e.kind(), Kind::function);
    EXPECT_EQ(print_expression(simplify(e)), "exp(ln(x1))");
}

TEST(Simplify, LikeTermsFold)
{
    EXPECT_EQ(P("2*u[x1] + 3*u[x1]"), P("5*u[x1]"));
    EXPECT_EQ(print_expression(P("2*u[x1] + 3*u[x1]")), "5*u[x1]");
}

TEST(Simplify, MixedPartialsCoincide)
{
    EXPECT_TRUE(P("u[x1,x2] - u[x2,x1]").is_zero());
}

TEST(Diff, ExpOfSymbol)
{
    EXPECT_EQ(diff(P("exp(v1)"), P("v1")), P("exp(v1)"));
}

TEST(Diff, OpaqueChainRule)
{
    const Expr d = diff(P("F(u + ln(u[x1]))"), P("u[x1]"));
    EXPECT_EQ(d, P("F'(u + ln(u[x1]))/u[x1]"));
}

TEST(Diff, LinearInParameter)
{
    EXPECT_EQ(diff(P("x2 + 2*C*v2"), P("v2")), P("2*C"));
}

TEST(Substitute, Rewrites)
{
    Substitution rules{{"v2", P("1/(exp(v1) - C)")}};
    EXPECT_EQ(substitute(P("v2"), rules), P("1/(exp(v1) - C)"));
    EXPECT_EQ(substitute(P("x1"), {}), P("x1"));
    Substitution r2{{"u[x1]", P("1/(x1 - x2)")}};
    EXPECT_EQ(substitute(P("u[x1]*u[x1]"), r2), P("(x1 - x2)^(-2)"));
}

TEST(Eval, Examples)
{
    ParameterBinding b;
    b.values["C"] = 1.0;
    EXPECT_DOUBLE_EQ(eval_numeric(P("exp(v1) - C"), {{"v1", 0.0}}, b), 0.0);
    ParameterBinding bk;
    bk.values["k"] = 2.0;
    EXPECT_DOUBLE_EQ(eval_numeric(P("sqrt(1 - k^2*v2^2)"), {{"v2", 0.0}}, bk), 1.0);
    EXPECT_THROW(eval_numeric(P("1/(exp(v1) - C)"), {{"v1", 0.0}}, b), DomainFault);
    EXPECT_THROW(eval_numeric(P("ln(x1)"), {{"x1", -1.0}}), DomainFault);
    EXPECT_THROW(eval_numeric(P("x1 + x2"), {{"x1", 1.0}}), UnboundSymbol);
}

TEST(ZeroTest, AdditionIdentityIsZero)
{
    const auto r = is_zero(P("sin(a+b) - sin(a)*cos(b) - cos(a)*sin(b)"), {}, 7);
    EXPECT_EQ(r.verdict, ZeroVerdict::zero);
}

TEST(ZeroTest, NonZeroHasWitness)
{
    const Expr e = P("exp(v1) - C");
    const auto r = is_zero(e, {}, 7);
    ASSERT_EQ(r.verdict, ZeroVerdict::nonzero);
    ASSERT_TRUE(r.witness.count("v1") && r.witness.count("C"));
    EXPECT_NEAR(eval_numeric(e, r.witness), r.witness_value, 1e-12);
    EXPECT_GT(std::fabs(r.witness_value), 1e-9);
}

TEST(ZeroTest, SymbolicProvenanceForLiteralZero)
{
    const Expr e = P("sin(x1)*u[x1,x2]");
    const auto r = is_zero(e - e, {}, 1);
    EXPECT_EQ(r.verdict, ZeroVerdict::zero);
    EXPECT_EQ(r.provenance, Provenance::symbolic);
}

TEST(ZeroTest, OpaqueFunctionIdentity)
{
    const auto r = is_zero(P("F(x1 + x2) - F(x2 + x1)"), {}, 3);
    EXPECT_EQ(r.verdict, ZeroVerdict::zero);
    const auto r2 = is_zero(P("F'(x1)*2 - F'(x1) - F'(x1)"), {}, 3);
    EXPECT_EQ(r2.verdict, ZeroVerdict::zero);
    const auto r3 = is_zero(P("F(x1) - F'(x1)"), {}, 3);
    EXPECT_EQ(r3.verdict, ZeroVerdict::nonzero);
}

TEST(ZeroTest, UnsatisfiableDomainIsInconclusive)
{
    SamplingSpec spec;
    spec.constraints.push_back(parse_constraint("x1^2 < 0", plane_context()));
    const auto r = is_zero(P("x1 - x2"), spec, 1);
    EXPECT_EQ(r.verdict, ZeroVerdict::inconclusive);
}

TEST(Parse, Examples)
{
    const auto [lhs, rhs] = parse_equation("u[x2,x2] = 1/(exp(u[x1]) - C)", plane_context());
    EXPECT_EQ(lhs, Expr::jet("u", {"x2", "x2"}));
    EXPECT_EQ(print_expression(lhs) + " = " + print_expression(rhs), "u[x2,x2] = 1/(exp(u[x1]) - C)");
    const Expr k = Expr::symbol("k");
    const Expr v2 = Expr::symbol("v2");
    EXPECT_EQ(P("sqrt(1 - k^2*v2^2)*sin(x3)"), sqrt(1 - pow(k, 2) * pow(v2, 2)) * sin(Expr::symbol("x3")));
    EXPECT_EQ(print_expression(P("sqrt(1 - k^2*v2^2)")), "sqrt(1 - k^2*v2^2)");
}

TEST(Print, Examples)
{
    EXPECT_EQ(print_expression(Expr(Rational(5, 2))), "5/2");
    EXPECT_EQ(print_expression(P("F'(u + ln(u[x1]))")), "F'(u + ln(u[x1]))");
}

TEST(Parse, Errors)
{
    const auto ctx = plane_context();
    EXPECT_THROW(parse_expression("x1 +", ctx), SyntaxError);
    EXPECT_THROW(parse_expression("zz + 1", ctx), UndeclaredSymbol);
    EXPECT_THROW(parse_expression("(x1", ctx), SyntaxError);
    try {
        parse_expression("x1 + \n  * 2", ctx);
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.line(), 2);
        EXPECT_EQ(e.column(), 3);
    }
}
