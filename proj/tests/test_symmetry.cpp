#include "fixtures.hpp"

#include "symred/error.hpp"

#include <gtest/gtest.h>

using namespace symred;
using namespace symred::testing;

namespace {

CheckOptions options_for(const EquationSystem& sys)
{
    CheckOptions o;
    o.sampling.constraints = sys.constraints;
    return o;
}

VectorField half_q_minus_d(const CorrespondingSystem& c)
{
    return Expr(Rational(1, 2)) * (c.Q() + Expr(-1) * c.D());
}

} // namespace

TEST(Restrict, ReducedEquationVanishes)
{
    CorrespondingSystem c;
    EXPECT_TRUE(restrict_to_manifold(c.L("v2[x2]*(exp(v1) - C) - 1"), c.sys).is_zero());
}

TEST(Restrict, DifferentialConsequences)
{
    LiouvilleOde o;
    // u11 -> -u1^2, u111 -> D1(-u1^2) = -2 u1 u11 -> 2 u1^3
    EXPECT_EQ(restrict_to_manifold(o.L("u[x1,x1,x1]"), o.sys), o.L("2*u[x1]^3"));
    // u112 -> D2(-u1^2) = -2 u1 u12
    EXPECT_EQ(restrict_to_manifold(o.L("u[x1,x1,x2]"), o.sys), o.L("-2*u[x1]*u[x1,x2]"));
    EXPECT_EQ(restrict_to_manifold(o.L("x1"), o.sys), o.L("x1"));
}

TEST(Restrict, Errors)
{
    LiouvilleOde o;
    EXPECT_THROW(restrict_to_manifold(o.L("u[x1]"), o.sys, {{JetCoord("u", {"x1", "x1"}), Expr(0)}}),
                 ConflictingConstraints);
    EquationSystem runaway = o.sys;
    runaway.equations = {o.L.eq("grow", "u[x1] = u[x1,x2]")};
    EXPECT_THROW(restrict_to_manifold(o.L("u[x1]"), runaway), IterationCapExceeded);
}

TEST(Restrict, Idempotent)
{
    PromotedWaveSystem w;
    const auto extra = invariant_surface_conditions(w.conditional("k*cos(x3)", "sqrt(1 - k^2*v2^2)/k"), w.sys);
    for (const char* s : {"v1[x2]*v2[x1]", "v1[x3] + v2[x3]*x1", "sin(v1[x2,x3])", "v2[x1,x1]"}) {
        const Expr once = restrict_to_manifold(w.L(s), w.sys, extra);
        EXPECT_EQ(restrict_to_manifold(once, w.sys, extra), once) << s;
    }
}

TEST(Classical, HalfQMinusDPasses)
{
    CorrespondingSystem c;
    const auto r = check_classical(half_q_minus_d(c), c.sys, 1, options_for(c.sys));
    EXPECT_EQ(r.verdict, Verdict::pass) << r.note;
}

TEST(Classical, ScalingPasses)
{
    CorrespondingSystem c;
    EXPECT_EQ(check_classical(c.D(), c.sys, 2, options_for(c.sys)).verdict, Verdict::pass);
}

TEST(Classical, NonSymmetryFailsWithWitness)
{
    CorrespondingSystem c;
    VectorField f;
    f.xi = {{"x1", c.L("x1")}};
    const auto r = check_classical(f, c.sys, 3, options_for(c.sys));
    ASSERT_EQ(r.verdict, Verdict::fail);
    EXPECT_EQ(r.failing, "compatibility");
    // residual on the first equation is v2[x1] (hand computation)
    EXPECT_EQ(r.residuals.front(), c.L("v2[x1]"));
    ASSERT_TRUE(r.witness.count("v2[x1]"));
    EXPECT_NEAR(r.witness_value, r.witness.at("v2[x1]"), 1e-12);
}

TEST(Conditional, SineGordonOperatorPasses)
{
    PromotedWaveSystem w;
    const auto q = w.conditional("k*cos(x3)", "sqrt(1 - k^2*v2^2)/k");
    const auto r = check_conditional(q, w.sys, 4, options_for(w.sys));
    EXPECT_EQ(r.verdict, Verdict::pass) << r.note;
}

TEST(Conditional, NonzeroC1Fails)
{
    PromotedWaveSystem w;
    // eta1 = -C cos x3 + C1 with C = -k and C1 = 1
    const auto q = w.conditional("k*cos(x3) + 1", "sqrt(1 - k^2*v2^2)/k");
    const auto r = check_conditional(q, w.sys, 5, options_for(w.sys));
    ASSERT_EQ(r.verdict, Verdict::fail);
    EXPECT_FALSE(r.witness.empty());
}

TEST(Conditional, NonzeroC2Fails)
{
    PromotedWaveSystem w;
    const auto q = w.conditional("k*cos(x3)", "sqrt(1 - k^2*v2^2)/k + 1");
    EXPECT_EQ(check_conditional(q, w.sys, 6, options_for(w.sys)).verdict, Verdict::fail);
}

TEST(Conditional, OtherSignBranch)
{
    PromotedWaveSystem w;
    // C = +k in eta1 = -C cos x3, eta2 = -(C/k^2) sqrt(1 - k^2 v2^2)
    const auto q = w.conditional("-k*cos(x3)", "-sqrt(1 - k^2*v2^2)/k");
    EXPECT_EQ(check_conditional(q, w.sys, 7, options_for(w.sys)).verdict, Verdict::pass);
}

TEST(Conditional, ClassicalPassImpliesConditionalPass)
{
    CorrespondingSystem c;
    for (const auto& vf : {c.D(), half_q_minus_d(c)}) {
        ASSERT_EQ(check_classical(vf, c.sys, 8, options_for(c.sys)).verdict, Verdict::pass);
        EXPECT_EQ(check_conditional(vf, c.sys, 8, options_for(c.sys)).verdict, Verdict::pass);
    }
}

TEST(LieBacklund, Examples)
{
    LiouvilleOde o;
    CheckOptions opts;
    opts.sampling.constraints = {parse_constraint("u[x1] > 0", o.L.ctx)};
    EXPECT_EQ(check_lie_backlund(o.op("u[x1,x2]/u[x1]^2"), o.sys, 9, opts).verdict, Verdict::pass);
    EXPECT_EQ(check_lie_backlund(o.op("F(u + ln(u[x1]))"), o.sys, 9, opts).verdict, Verdict::pass);
    EXPECT_EQ(check_lie_backlund(o.op("u[x1,x1] + u[x1]^2"), o.sys, 9, opts).verdict, Verdict::pass);
    const auto bad = check_lie_backlund(o.op("F(u + u[x1])"), o.sys, 9, opts);
    EXPECT_EQ(bad.verdict, Verdict::fail);
    EXPECT_FALSE(bad.witness.empty());
}

TEST(LieBacklund, VerdictInvariantUnderScaling)
{
    LiouvilleOde o;
    CheckOptions opts;
    opts.sampling.constraints = {parse_constraint("u[x1] > 0", o.L.ctx)};
    for (const char* u : {"u[x1,x2]/u[x1]^2", "F(u + ln(u[x1]))", "F(u + u[x1])", "u[x1]"}) {
        const auto base = check_lie_backlund(o.op(u), o.sys, 10, opts).verdict;
        for (int k : {-3, 2, 7}) {
            EXPECT_EQ(check_lie_backlund(o.op(std::to_string(k) + "*(" + u + ")"), o.sys, 10, opts).verdict, base) << u;
        }
    }
}

TEST(LieBacklund, RejectsNonOrdinaryLead)
{
    LiouvilleOde o;
    EquationSystem mixed = o.sys;
    mixed.equations = {o.L.eq("mixed", "u[x1,x2] = u[x1]")};
    EXPECT_THROW(check_lie_backlund(o.op("1"), mixed, 1), Error);
}

TEST(Checks, DeterministicForSeed)
{
    CorrespondingSystem c;
    VectorField f;
    f.xi = {{"x1", c.L("x1")}};
    const auto a = check_classical(f, c.sys, 42, options_for(c.sys));
    const auto b = check_classical(f, c.sys, 42, options_for(c.sys));
    EXPECT_EQ(a.witness, b.witness);
    EXPECT_EQ(a.witness_value, b.witness_value);
}

namespace {

struct ReducedEquation2 {
    Lang L;
    EquationSystem sys;

    ReducedEquation2()
    {
        L.ctx.add_independent("x1");
        L.ctx.add_independent("x2");
        L.ctx.add_dependent("u", {"x1", "x2"});
        L.ctx.add_parameter("C");
        sys.space = JetSpace({"x1", "x2"}, {"u"});
        sys.equations = {L.eq("eq", "u[x2,x2] = 1/(exp(u[x1]) - C)")};
        sys.constraints = {parse_constraint("exp(u[x1]) - C != 0", L.ctx)};
    }

    VectorField field(const std::string& xi1, const std::string& xi2, const std::string& eta) const
    {
        VectorField f;
        f.xi = {{"x1", L(xi1)}, {"x2", L(xi2)}};
        f.eta = {{"u", L(eta)}};
        return f;
    }
};

} // namespace

TEST(Novelty, EmptyAlgebraConcludesFalse)
{
    ReducedEquation2 e;
    const auto d = novelty_diagnostic({}, {e.field("1", "0", "0")}, 0, e.sys, 1, options_for(e.sys));
    EXPECT_EQ(d.s, 0u);
    EXPECT_FALSE(d.conclusion);
}

TEST(Novelty, TranslationsPreserveTranslationFamily)
{
    ReducedEquation2 e;
    const auto d = novelty_diagnostic({e.field("1", "0", "0"), e.field("0", "1", "0")}, {e.field("1", "0", "0")}, 5,
                                      e.sys, 2, options_for(e.sys));
    ASSERT_EQ(d.constraint_verdicts.size(), 2u);
    for (const auto& r : d.constraint_verdicts) {
        EXPECT_EQ(r.verdict, Verdict::pass);
    }
    EXPECT_FALSE(d.conclusion); // s = 2 < t + 1
    EXPECT_FALSE(d.assumptions.empty());
}

TEST(Novelty, ConstructedInstanceConcludesTrue)
{
    // Family {d/dx1} gives u_{x1} = 0; the reduced equation u_22 = 1/(1 - C) has t = 2 constants.
    ReducedEquation2 e;
    const std::vector<VectorField> algebra{e.field("0", "1", "0"), e.field("0", "0", "1"), e.field("0", "0", "x2")};
    const auto d = novelty_diagnostic(algebra, {e.field("1", "0", "0")}, 2, e.sys, 3, options_for(e.sys));
    EXPECT_EQ(d.s, 3u);
    EXPECT_TRUE(d.conclusion);

    std::vector<VectorField> broken = algebra;
    broken[2] = e.field("0", "0", "x1");
    const auto n = novelty_diagnostic(broken, {e.field("1", "0", "0")}, 2, e.sys, 3, options_for(e.sys));
    EXPECT_FALSE(n.conclusion);
    EXPECT_EQ(n.constraint_verdicts[2].verdict, Verdict::fail);
}
