#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hofilt/error.hpp"
#include "hofilt/expr.hpp"
#include "random_expr.hpp"

using namespace hofilt;

TEST(Parse, SingleVariable) {
  const Expr e = parse("x1", 1);
  EXPECT_EQ(e.op(), Op::Var);
  EXPECT_EQ(e.index(), 1);
}

TEST(Parse, SumOfFunctionAndScaledPower) {
  const Expr e = parse("sin(x1) + 0.5*x2^2", 2);
  ASSERT_EQ(e.op(), Op::Add);
  ASSERT_EQ(e.children().size(), 2u);
  EXPECT_EQ(e.children()[0].op(), Op::Sin);
  EXPECT_EQ(e.children()[0].children()[0].index(), 1);
  const Expr& m = e.children()[1];
  ASSERT_EQ(m.op(), Op::Mul);
  EXPECT_TRUE(m.children()[0].is_constant(0.5));
  EXPECT_EQ(m.children()[1].op(), Op::Pow);
  EXPECT_EQ(m.children()[1].exponent(), 2);
  EXPECT_EQ(m.children()[1].children()[0].index(), 2);
}

TEST(Parse, VariableOutOfRange) { EXPECT_THROW(parse("x3", 2), UnknownVariable); }

TEST(Parse, UnknownName) { EXPECT_THROW(parse("y1 + 1", 1), UnknownVariable); }

TEST(Parse, PowerBindsTighterThanUnaryMinus) {
  const std::vector<double> x{3.0};
  EXPECT_EQ(parse("-x1^2", 1).eval(x), -9.0);
  EXPECT_EQ(parse("2^3^2", 1).eval(x), 512.0);
}

TEST(Parse, DivisionByConstantOnly) {
  const std::vector<double> x{3.0};
  EXPECT_EQ(parse("x1/2", 1).eval(x), 1.5);
  EXPECT_EQ(parse("x1/(1+1)", 1).eval(x), 1.5);
  EXPECT_THROW(parse("1/x1", 1), SyntaxError);
  EXPECT_THROW(parse("x1/0", 1), SyntaxError);
}

TEST(Parse, NonIntegerExponents) {
  EXPECT_THROW(parse("x1^0.5", 1), NonIntegerExponent);
  EXPECT_THROW(parse("x1^(-1)", 1), NonIntegerExponent);
  EXPECT_THROW(parse("x1^x1", 1), NonIntegerExponent);
}

TEST(Parse, SyntaxErrorsCarryPosition) {
  try {
    parse("x1 + * 2", 1);
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(parse("sin(x1", 1), SyntaxError);
  EXPECT_THROW(parse("", 1), SyntaxError);
  EXPECT_THROW(parse("x1 x1", 1), SyntaxError);
  EXPECT_THROW(parse("log(x1)", 1), SyntaxError);
}

TEST(Parse, ScientificLiterals) {
  const std::vector<double> x{0.0};
  EXPECT_EQ(parse("1.5e-3", 1).eval(x), 1.5e-3);
  EXPECT_EQ(parse("2E2", 1).eval(x), 200.0);
}

TEST(Diff, PowerRule) {
  const Expr d = diff(Expr::pow(Expr::var(1), 2), 1);
  ASSERT_EQ(d.op(), Op::Mul);
  EXPECT_TRUE(d.children()[0].is_constant(2.0));
  EXPECT_EQ(d.children()[1].op(), Op::Var);
}

TEST(Diff, SinToCos) {
  const Expr d = diff(Expr::func(Op::Sin, Expr::var(1)), 1);
  EXPECT_EQ(d.op(), Op::Cos);
  EXPECT_EQ(d.children()[0].index(), 1);
}

TEST(Diff, ConstantVanishes) { EXPECT_TRUE(diff(Expr::constant(3.0), 1).is_constant(0.0)); }

TEST(Diff, OtherVariableVanishes) { EXPECT_TRUE(diff(parse("x2^3 + sin(x2)", 2), 1).is_constant(0.0)); }

TEST(Eval, Examples) {
  EXPECT_EQ(Expr::mul({Expr::constant(2.0), Expr::var(1)}).eval(std::vector<double>{3.0}), 6.0);
  EXPECT_EQ(Expr::func(Op::Exp, Expr::constant(0.0)).eval(std::vector<double>{42.0}), 1.0);
  EXPECT_EQ(parse("x1^2 + x2", 2).eval(std::vector<double>{2.0, 1.0}), 5.0);
}

TEST(Eval, ShortPointIsRejected) {
  EXPECT_THROW(parse("x2", 2).eval(std::vector<double>{1.0}), LengthMismatch);
}

TEST(Simplify, FoldsAndAbsorbs) {
  EXPECT_TRUE(parse("0*x1 + 2*3", 1).is_constant(6.0));
  EXPECT_EQ(parse("1*x1 + 0", 1).op(), Op::Var);
  EXPECT_EQ(parse("--x1", 1).op(), Op::Var);
  EXPECT_TRUE(parse("x1^0", 1).is_constant(1.0));
  EXPECT_EQ(parse("(x1 + x2) + x1", 2).children().size(), 3u);
}

TEST(Properties, DiffIsLinear) {
  test_support::RandomExpr gen(2, 11);
  for (int trial = 0; trial < 20; ++trial) {
    const Expr e1 = gen(3), e2 = gen(3);
    const Expr a = Expr::constant(-1.75);
    const Expr lhs = diff(a * e1 + e2, 1);
    const Expr rhs = a * diff(e1, 1) + diff(e2, 1);
    for (int p = 0; p < 100; ++p) {
      const auto x = gen.point();
      const double l = lhs.eval(x), r = rhs.eval(x);
      EXPECT_NEAR(l, r, 1e-12 * (1.0 + std::abs(l))) << print(e1) << " | " << print(e2);
    }
  }
}

TEST(Properties, DiffMatchesCentralDifferences) {
  test_support::RandomExpr gen(3, 12);
  const double h = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Expr e = gen(5);
    const int k = 1 + trial % 3;
    const Expr d = diff(e, k);
    auto x = gen.point();
    const double exact = d.eval(x);
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(k - 1)] += h;
    xm[static_cast<std::size_t>(k - 1)] -= h;
    const double fd = (e.eval(xp) - e.eval(xm)) / (2.0 * h);
    // Round-off of the difference quotient scales with |e| / h.
    const double noise = 1e-16 * (std::abs(e.eval(xp)) + std::abs(e.eval(xm))) / h;
    EXPECT_LE(std::abs(exact - fd), 1e-6 * (1.0 + std::abs(exact)) + noise) << print(e) << " k=" << k;
    ++checked;
  }
  EXPECT_EQ(checked, 300);
}

TEST(Properties, PrintParseRoundTrip) {
  test_support::RandomExpr gen(3, 13);
  for (int trial = 0; trial < 200; ++trial) {
    const Expr e = gen(4);
    const Expr back = parse(print(e), 3);
    for (int p = 0; p < 100; ++p) {
      const auto x = gen.point();
      const double a = e.eval(x), b = back.eval(x);
      EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a))) << print(e);
    }
  }
}

TEST(Properties, CompiledMatchesTreeBitForBit) {
  test_support::RandomExpr gen(3, 14);
  for (int trial = 0; trial < 200; ++trial) {
    const Expr e = diff(gen(4), 1 + trial % 3);
    const CompiledExpr c(e);
    for (int p = 0; p < 50; ++p) {
      const auto x = gen.point();
      const double a = e.eval(x), b = c.eval(x);
      EXPECT_EQ(std::bit_cast<std::uint64_t>(a), std::bit_cast<std::uint64_t>(b)) << print(e);
    }
  }
}

TEST(Compiled, SharesRepeatedSubtrees) {
  const Expr t = parse("tanh(x1)", 1);
  const Expr e = t * t + t * t * t;
  const CompiledExpr c(e);
  EXPECT_LT(c.registers(), e.node_count());
  EXPECT_EQ(c.eval(std::vector<double>{0.3}), e.eval(std::vector<double>{0.3}));
}

TEST(Bounded, DetectsPolynomialGrowth) {
  EXPECT_TRUE(is_bounded(parse("tanh(x1) + sin(x1)^3", 1)));
  EXPECT_FALSE(is_bounded(parse("-0.5*x1", 1)));
  EXPECT_TRUE(is_bounded(parse("0.3", 1)));
}
