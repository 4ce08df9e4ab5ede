#include "accr/expr.hpp"
#include "accr/jet.hpp"
#include "random_expr.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace accr;

namespace {

std::size_t choose(int n, int k) {
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

Jet random_jet(std::mt19937_64& rng, JetSpace sp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Jet j(sp, 0.0);
  for (std::size_t k = 0; k < j.size(); ++k) j.coefficient(k) = u(rng);
  return j;
}

}  // namespace

TEST(Jet, LiftVarExamples) {
  const Jet a = Jet::lift_var(0, 2.0, 1, 2);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.coefficient(0), 2.0);
  EXPECT_EQ(a.coefficient(1), 1.0);
  EXPECT_EQ(a.coefficient(2), 0.0);

  const Jet b = Jet::lift_var(1, 0.0, 2, 1);
  EXPECT_EQ(b.value(), 0.0);
  EXPECT_EQ(b.d(0), 0.0);
  EXPECT_EQ(b.d(1), 1.0);
}

TEST(Jet, SineTaylorCoefficients) {
  const Jet s = sin(Jet::lift_var(0, 0.0, 1, 3));
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s.coefficient(0), 0.0);
  EXPECT_DOUBLE_EQ(s.coefficient(1), 1.0);
  EXPECT_DOUBLE_EQ(s.coefficient(2), 0.0);
  EXPECT_DOUBLE_EQ(s.coefficient(3), -1.0 / 6.0);
}

TEST(Jet, SquareStoresTaylorCoefficient) {
  const Jet x = Jet::lift_var(0, 3.0, 1, 2);
  const Jet sq = x * x;
  EXPECT_DOUBLE_EQ(sq.coefficient(0), 9.0);
  EXPECT_DOUBLE_EQ(sq.coefficient(1), 6.0);
  EXPECT_DOUBLE_EQ(sq.coefficient(2), 1.0);  // Taylor normalization: f''/2!
  EXPECT_DOUBLE_EQ(sq.d(0, 0), 2.0);
}

TEST(Jet, ReciprocalCoshIsEven) {
  const Jet t = Jet::lift_var(0, 0.0, 1, 1);
  const Jet r = Jet(t.space(), 1.0) / cosh(t);
  EXPECT_DOUBLE_EQ(r.value(), 1.0);
  EXPECT_DOUBLE_EQ(r.d(0), 0.0);
}

TEST(Jet, ConstantPropagation) {
  const JetSpace sp{3, 3};
  const double c = 0.37;
  const Jet e = exp(Jet(sp, c) * 2.0);
  EXPECT_DOUBLE_EQ(e.value(), std::exp(2 * c));
  for (std::size_t k = 1; k < e.size(); ++k) EXPECT_EQ(e.coefficient(k), 0.0);
}

TEST(Jet, CoefficientCountIsBinomial) {
  for (int m = 0; m <= 7; ++m)
    for (int k = 0; k <= 3; ++k) EXPECT_EQ(Jet(JetSpace{m, k}, 1.0).size(), choose(m + k, k)) << m << " " << k;
}

TEST(Jet, ArithmeticClosure) {
  std::mt19937_64 rng(3);
  const JetSpace sp{3, 2};
  const Jet a = random_jet(rng, sp), b = random_jet(rng, sp) + 3.0;
  for (const Jet& r : {a + b, a - b, a * b, a / b, sin(a), exp(a), pow(b, 2), sqrt(b), log(b), atan(a), tanh(a)})
    EXPECT_EQ(r.space(), sp);
  EXPECT_THROW((void)(a + Jet(JetSpace{3, 1}, 0.0)), std::logic_error);
}

TEST(Jet, LeibnizMatchesBruteForceConvolution) {
  std::mt19937_64 rng(17);
  for (int m = 1; m <= 3; ++m)
    for (int k = 0; k <= 3; ++k) {
      const JetSpace sp{m, k};
      for (int rep = 0; rep < 5; ++rep) {
        const Jet a = random_jet(rng, sp), b = random_jet(rng, sp);
        const Jet c = a * b;
        std::vector<double> oracle(c.size(), 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
          for (std::size_t j = 0; j < b.size(); ++j) {
            MultiIndex sum = a.multi_index(i);
            int deg = 0;
            for (int v = 0; v < m; ++v) {
              sum[static_cast<std::size_t>(v)] += b.multi_index(j)[static_cast<std::size_t>(v)];
              deg += sum[static_cast<std::size_t>(v)];
            }
            if (deg > k) continue;
            for (std::size_t q = 0; q < c.size(); ++q)
              if (c.multi_index(q) == sum) oracle[q] += a.coefficient(i) * b.coefficient(j);
          }
        for (std::size_t q = 0; q < c.size(); ++q) EXPECT_NEAR(c.coefficient(q), oracle[q], 1e-14) << m << " " << k << " " << q;
      }
    }
}

TEST(Jet, DivisionInvertsMultiplication) {
  std::mt19937_64 rng(9);
  const JetSpace sp{2, 3};
  const Jet a = random_jet(rng, sp), b = random_jet(rng, sp) + 2.5;
  const Jet back = (a * b) / b;
  for (std::size_t q = 0; q < a.size(); ++q) EXPECT_NEAR(back.coefficient(q), a.coefficient(q), 1e-13);
}

TEST(Jet, FunctionIdentities) {
  const Jet x = Jet::lift_var(0, 0.7, 1, 3);
  const Jet one = Jet(x.space(), 1.0);
  const Jet s = sin(x), c = cos(x);
  const Jet id1 = s * s + c * c - one;
  const Jet id2 = cosh(x) * cosh(x) - sinh(x) * sinh(x) - one;
  const Jet id3 = exp(log(x + 1.0)) - (x + 1.0);
  const Jet id4 = tan(atan(x)) - x;
  const Jet id5 = sin(asin(x * 0.5)) - x * 0.5;
  const Jet id6 = sqrt(x) * sqrt(x) - x;
  const Jet id7 = tanh(x) * cosh(x) - sinh(x);
  for (const Jet& z : {id1, id2, id3, id4, id5, id6, id7})
    for (std::size_t q = 0; q < z.size(); ++q) EXPECT_NEAR(z.coefficient(q), 0.0, 1e-14);
}

TEST(Jet, DomainErrorsReported) {
  const JetSpace sp{1, 1};
  EXPECT_THROW((void)log(Jet(sp, -1.0)), DomainError);
  EXPECT_THROW((void)sqrt(Jet(sp, 0.0)), DomainError);
  EXPECT_THROW((void)asin(Jet(sp, 1.0)), DomainError);
  EXPECT_THROW((void)(Jet(sp, 1.0) / Jet(sp, 0.0)), DomainError);
}

TEST(Jet, DerivativeShiftsOrder) {
  // f = x^2 y^3 at (2, 1)
  const JetSpace sp{2, 3};
  const Jet f = pow(Jet::variable(0, 2.0, sp), 2) * pow(Jet::variable(1, 1.0, sp), 3);
  const Jet fy = f.derivative(1);
  EXPECT_EQ(fy.order(), 2);
  EXPECT_DOUBLE_EQ(fy.value(), 12.0);   // 3 x^2 y^2
  EXPECT_DOUBLE_EQ(fy.d(0), 12.0);      // 6 x y^2
  EXPECT_DOUBLE_EQ(fy.d(1, 1), 24.0);   // 6 x^2
  EXPECT_DOUBLE_EQ(f.truncated(1).d(0), f.d(0));
  EXPECT_EQ(f.truncated(1).order(), 1);
}

TEST(Jet, ChainRuleAgainstFiniteDifferences) {
  const std::vector<std::string> vars{"x", "y", "z"};
  testkit::RandomExpr gen(99, vars);
  double w1 = 0.0, w2 = 0.0, w3 = 0.0;
  for (int i = 0; i < 300; ++i) {
    const Expr e = gen.make(4);
    const auto p = gen.point();
    const testkit::FdCheck c = testkit::finite_difference_check(e, vars, p);
    w1 = std::max(w1, c.first);
    w2 = std::max(w2, c.second);

    // third derivatives: pure and one mixed, from plain evaluation
    std::map<std::string, Jet> jb;
    for (int k = 0; k < 3; ++k) jb[vars[static_cast<std::size_t>(k)]] = Jet::variable(k, p.at(vars[static_cast<std::size_t>(k)]), {3, 3});
    const Jet j = eval(e, jb, {3, 3});
    const double h = 1e-3;
    auto f = [&](double dx, double dy) {
      auto q = p;
      q["x"] += dx;
      q["y"] += dy;
      return eval(e, q);
    };
    const double fxxx = (f(2 * h, 0) - 2 * f(h, 0) + 2 * f(-h, 0) - f(-2 * h, 0)) / (2 * h * h * h);
    auto fxx = [&](double dy) { return (f(h, dy) - 2 * f(0, dy) + f(-h, dy)) / (h * h); };
    const double fxxy = (fxx(h) - fxx(-h)) / (2 * h);
    w3 = std::max(w3, testkit::relative_error(j.partial({3, 0, 0}), fxxx));
    w3 = std::max(w3, testkit::relative_error(j.partial({2, 1, 0}), fxxy));
  }
  EXPECT_LT(w1, 1e-5);
  EXPECT_LT(w2, 1e-5);
  EXPECT_LT(w3, 1e-3);
}

TEST(Jet, OrderZeroHasNoDerivative) { EXPECT_THROW((void)Jet(JetSpace{1, 0}, 1.0).derivative(0), std::logic_error); }
