#pragma once

// Random expression trees with safe domains on the box [0.5, 1.5]^m.

#include "accr/expr.hpp"

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace accr::testkit {

class RandomExpr {
public:
  RandomExpr(std::uint64_t seed, std::vector<std::string> vars) : rng_(seed), vars_(std::move(vars)) {}

  Expr make(int depth) {
    if (depth <= 0 || pick(5) == 0) return leaf();
    const Expr a = make(depth - 1);
    switch (pick(16)) {
      case 0: return a + make(depth - 1);
      case 1: return a - make(depth - 1);
      case 2: return a * make(depth - 1);
      case 3: {
        const Expr b = make(depth - 1);
        return a / (constant(1.0) + b * b);
      }
      case 4: return pow(a, static_cast<double>(pick(3) + 2));
      case 5: return sin(a);
      case 6: return cos(a);
      case 7: return tan(constant(0.5) * tanh(a));
      case 8: return sinh(tanh(a));
      case 9: return cosh(tanh(a));
      case 10: return tanh(a);
      case 11: return exp(tanh(a));
      case 12: return log(constant(2.0) + sin(a));
      case 13: return sqrt(constant(1.0) + a * a);
      case 14: return atan(a);
      default: return asin(constant(0.5) * tanh(a));
    }
  }

  std::string random_var() { return vars_[static_cast<std::size_t>(pick(static_cast<int>(vars_.size())))]; }

  std::map<std::string, double> point() {
    std::map<std::string, double> p;
    for (const auto& v : vars_) p[v] = 0.5 + uniform();
    return p;
  }

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

private:
  int pick(int n) { return static_cast<int>(rng_() % static_cast<std::uint64_t>(n)); }

  Expr leaf() {
    if (pick(3) == 0) return constant(std::round((uniform() * 4.0 - 2.0) * 100.0) / 100.0);
    return variable(random_var());
  }

  std::mt19937_64 rng_;
  std::vector<std::string> vars_;
};

/// Relative error with a unit floor so values near zero compare absolutely.
inline double relative_error(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1.0}); }

struct FdCheck {
  double first = 0.0;
  double second = 0.0;
};

/// Compares jet first and second partials of e at p with Richardson-extrapolated
/// central differences of plain evaluation.
inline FdCheck finite_difference_check(const Expr& e, const std::vector<std::string>& vars, const std::map<std::string, double>& p,
                                       double h1 = 1e-4, double h2 = 2e-4) {
  const int m = static_cast<int>(vars.size());
  std::map<std::string, Jet> jb;
  for (int i = 0; i < m; ++i) jb[vars[static_cast<std::size_t>(i)]] = Jet::variable(i, p.at(vars[static_cast<std::size_t>(i)]), {m, 2});
  const Jet j = eval(e, jb, {m, 2});
  auto at = [&](const std::string& a, double da, const std::string& b, double db) {
    auto q = p;
    q[a] += da;
    q[b] += db;
    return eval(e, q);
  };
  auto first = [&](const std::string& x, double h) { return (at(x, h, x, 0) - at(x, -h, x, 0)) / (2 * h); };
  auto second = [&](const std::string& x, const std::string& y, double h) {
    if (x == y) return (at(x, h, x, 0) - 2.0 * eval(e, p) + at(x, -h, x, 0)) / (h * h);
    return (at(x, h, y, h) - at(x, h, y, -h) - at(x, -h, y, h) + at(x, -h, y, -h)) / (4 * h * h);
  };
  FdCheck r;
  for (int i = 0; i < m; ++i) {
    const std::string& xi = vars[static_cast<std::size_t>(i)];
    const double d1 = (4.0 * first(xi, h1 / 2) - first(xi, h1)) / 3.0;
    r.first = std::max(r.first, relative_error(j.d(i), d1));
    for (int k = i; k < m; ++k) {
      const std::string& xk = vars[static_cast<std::size_t>(k)];
      const double d2 = (4.0 * second(xi, xk, h2 / 2) - second(xi, xk, h2)) / 3.0;
      r.second = std::max(r.second, relative_error(j.d(i, k), d2));
    }
  }
  return r;
}

}  // namespace accr::testkit
