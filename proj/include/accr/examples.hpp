#pragma once

// Built-in manifolds: the flat cosymplectic model, the hypersurface of the complex
// quadric type in R^{2n+2}, and randomized structures obtained by frame changes.

#include "accr/structure.hpp"
#include "accr/transform.hpp"

#include <Eigen/Dense>

#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace accr {

// ---------------------------------------------------------------------------
// Coordinate naming: x1..xn, xn1..xnn, t.

inline std::vector<std::string> standard_coords(int n) {
  std::vector<std::string> c;
  for (int k = 1; k <= n; ++k) c.push_back("x" + std::to_string(k));
  for (int k = 1; k <= n; ++k) c.push_back("xn" + std::to_string(k));
  c.push_back("t");
  return c;
}

inline Box default_box(int n, Interval iv = {0.5, 1.5}) { return Box(static_cast<std::size_t>(2 * n + 1), iv); }

/// phi e_k = e_{n+k}, phi e_{n+k} = -e_k, phi e_t = 0.
inline std::vector<std::vector<Expr>> standard_phi(int n) {
  const auto d = static_cast<std::size_t>(2 * n + 1);
  std::vector<std::vector<Expr>> phi(d, std::vector<Expr>(d, constant(0.0)));
  for (int k = 0; k < n; ++k) {
    phi[static_cast<std::size_t>(n + k)][static_cast<std::size_t>(k)] = constant(1.0);
    phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(n + k)] = constant(-1.0);
  }
  return phi;
}

inline ChartManifold build_flat_f0(int n) {
  if (n < 1) throw ChartError("n must be at least 1");
  ChartManifold m;
  m.name = "flat-f0";
  m.n = n;
  m.coords = standard_coords(n);
  const auto d = static_cast<std::size_t>(2 * n + 1);
  m.metric.assign(d, std::vector<Expr>(d, constant(0.0)));
  for (std::size_t i = 0; i < d; ++i) m.metric[i][i] = constant(i < static_cast<std::size_t>(n) || i == d - 1 ? 1.0 : -1.0);
  m.phi = standard_phi(n);
  m.xi.assign(d, constant(0.0));
  m.eta.assign(d, constant(0.0));
  m.xi[d - 1] = constant(1.0);
  m.eta[d - 1] = constant(1.0);
  m.box = default_box(n);
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Hypersurface example.

struct ComplexExpr {
  Expr re, im;
  friend ComplexExpr operator*(const ComplexExpr& a, const ComplexExpr& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
};

inline ComplexExpr complex_cos(const Expr& p, const Expr& q) { return {cos(p) * cosh(q), -(sin(p) * sinh(q))}; }
inline ComplexExpr complex_sin(const Expr& p, const Expr& q) { return {sin(p) * cosh(q), cos(p) * sinh(q)}; }

struct HypersurfaceChart {
  ChartManifold manifold;
  std::vector<Expr> embedding;  // ambient coordinates X^1..X^{2n+2}
};

/// Level set G(Z, JZ) = 0, G(Z, Z) = cosh^2 t in (R^{2n+2}, J, G), parametrized by complex
/// spherical angles a_k = x_k + i xn_k and t.
inline HypersurfaceChart build_hypersurface(int n) {
  if (n < 1) throw ChartError("n must be at least 1");
  HypersurfaceChart h;
  ChartManifold& m = h.manifold;
  m.name = "hypersurface-f5";
  m.n = n;
  m.coords = standard_coords(n);
  const int d = 2 * n + 1;
  const Expr t = variable("t");

  // unit complex sphere point W with sum W_j^2 = 1
  std::vector<ComplexExpr> w;
  ComplexExpr prefix{constant(1.0), constant(0.0)};
  for (int k = 0; k < n; ++k) {
    const Expr p = variable(m.coords[static_cast<std::size_t>(k)]);
    const Expr q = variable(m.coords[static_cast<std::size_t>(n + k)]);
    w.push_back(prefix * complex_cos(p, q));
    prefix = prefix * complex_sin(p, q);
  }
  w.push_back(prefix);
  // Z = i cosh t W
  const Expr ch = cosh(t);
  h.embedding.assign(static_cast<std::size_t>(2 * n + 2), constant(0.0));
  for (int j = 0; j <= n; ++j) {
    h.embedding[static_cast<std::size_t>(j)] = -(ch * w[static_cast<std::size_t>(j)].im);
    h.embedding[static_cast<std::size_t>(n + 1 + j)] = ch * w[static_cast<std::size_t>(j)].re;
  }
  std::vector<std::vector<Expr>> dx(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) {
    Differentiator D(m.coords[static_cast<std::size_t>(a)]);
    for (const auto& x : h.embedding) dx[static_cast<std::size_t>(a)].push_back(D(x));
  }
  m.metric.assign(static_cast<std::size_t>(d), std::vector<Expr>(static_cast<std::size_t>(d)));
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      Expr s = constant(0.0);
      for (int J = 0; J < 2 * n + 2; ++J) {
        Expr term = dx[static_cast<std::size_t>(a)][static_cast<std::size_t>(J)] * dx[static_cast<std::size_t>(b)][static_cast<std::size_t>(J)];
        s = J <= n ? s - term : s + term;
      }
      m.metric[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = s;
      m.metric[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = s;
    }
  m.phi = standard_phi(n);
  m.xi.assign(static_cast<std::size_t>(d), constant(0.0));
  m.eta.assign(static_cast<std::size_t>(d), constant(0.0));
  m.xi[static_cast<std::size_t>(d - 1)] = 1.0 / sinh(t);
  m.eta[static_cast<std::size_t>(d - 1)] = sinh(t);
  m.box = default_box(n);
  m.validate();
  return h;
}

struct AmbientResiduals {
  double j_squared = 0.0;          // J^2 + I
  double norden = 0.0;             // G(JX, JY) + G(X, Y)
  double g_z_jz = 0.0;             // G(Z, JZ)
  double g_z_z = 0.0;              // G(Z, Z) - cosh^2 t
  double min_singular_ratio = 0.0; // smallest / largest singular value of the Jacobian
  int jacobian_rank = 0;
  double g_n_n = 0.0;              // G(N, N) + 1
  double xi_tangency = 0.0;        // distance of -JN from the tangent space
  double xi_match = 0.0;           // chart components of -JN against xi
  double structure_split = 0.0;    // JX - phi X - eta(X) J xi
  double restriction = 0.0;        // g - G restricted
  double gauss = 0.0;              // induced connection vs tangential ambient derivative
};

/// Ambient checks of the hypersurface at one chart point.
inline AmbientResiduals hypersurface_ambient_check(const HypersurfaceChart& h, std::span<const double> p) {
  const ChartManifold& m = h.manifold;
  const int n = m.n, d = m.dim(), D = 2 * n + 2;
  PointContext ctx(m.coords, p, 2);
  std::vector<Jet> X;
  for (const auto& e : h.embedding) X.push_back(ctx(e));
  auto G = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (int J = 0; J < D; ++J) s += (J <= n ? -1.0 : 1.0) * a(J) * b(J);
    return s;
  };
  auto J = [&](const Eigen::VectorXd& a) {
    Eigen::VectorXd r(D);
    for (int i = 0; i <= n; ++i) {
      r(n + 1 + i) = a(i);
      r(i) = -a(n + 1 + i);
    }
    return r;
  };
  AmbientResiduals r;
  Eigen::VectorXd Z(D);
  Eigen::MatrixXd Jac(D, d);
  for (int K = 0; K < D; ++K) {
    Z(K) = X[static_cast<std::size_t>(K)].value();
    for (int a = 0; a < d; ++a) Jac(K, a) = X[static_cast<std::size_t>(K)].d(a);
  }
  {
    std::mt19937_64 rng(7);
    auto uni = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    Eigen::VectorXd a(D), b(D);
    for (int K = 0; K < D; ++K) {
      a(K) = uni();
      b(K) = uni();
    }
    r.j_squared = (J(J(a)) + a).cwiseAbs().maxCoeff();
    r.norden = std::fabs(G(J(a), J(b)) + G(a, b));
  }
  const double t = p[static_cast<std::size_t>(d - 1)];
  r.g_z_jz = std::fabs(G(Z, J(Z)));
  r.g_z_z = std::fabs(G(Z, Z) - std::cosh(t) * std::cosh(t));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  r.min_singular_ratio = sv(d - 1) / sv(0);
  r.jacobian_rank = 0;
  for (int i = 0; i < d; ++i)
    if (sv(i) > 1e-10 * sv(0)) ++r.jacobian_rank;
  const Eigen::VectorXd N = J(Z) / std::cosh(t);
  r.g_n_n = std::fabs(G(N, N) + 1.0);
  const Eigen::VectorXd xi_amb = -J(N);
  const Eigen::VectorXd c = svd.solve(xi_amb);
  r.xi_tangency = (Jac * c - xi_amb).cwiseAbs().maxCoeff();
  StructureEval s(m, p, 1);
  for (int a = 0; a < d; ++a) r.xi_match = std::max(r.xi_match, std::fabs(c(a) - s.xi()(a)));
  const Eigen::VectorXd jxi = J(xi_amb);
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd phix = Eigen::VectorXd::Zero(D);
    for (int b = 0; b < d; ++b) phix += s.phi()(b, a) * Jac.col(b);
    const Eigen::VectorXd diff = J(Jac.col(a)) - phix - s.eta()(a) * jxi;
    r.structure_split = std::max(r.structure_split, diff.cwiseAbs().maxCoeff());
    for (int b = 0; b < d; ++b) r.restriction = std::max(r.restriction, std::fabs(s.g()(a, b) - G(Jac.col(a), Jac.col(b))));
  }
  // Gauss: G(d_a d_b X, d_c X) = Gamma^e_ab g_ec
  const RealTensor& gam = s.frame().christoffel();
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      Eigen::VectorXd second(D);
      for (int K = 0; K < D; ++K) second(K) = X[static_cast<std::size_t>(K)].d(a, b);
      for (int e = 0; e < d; ++e) {
        double v = 0.0;
        for (int c2 = 0; c2 < d; ++c2) v += s.ginv()(e, c2) * G(second, Jac.col(c2));
        r.gauss = std::max(r.gauss, std::fabs(v - gam(e, a, b)));
      }
    }
  return r;
}

// ---------------------------------------------------------------------------

enum class Normalization { Reeb, Raw };

inline const char* normalization_name(Normalization nm) { return nm == Normalization::Reeb ? "reeb" : "raw"; }

/// Antiderivative along the Reeb flow of the hypersurface: F(t) with F'(t) = q'(t) sinh t,
/// so that dF(xi) = q'(t) where xi = (1/sinh t) d/dt.
inline Expr reeb_lift(const Expr& q, double lower = 1.0) {
  const Expr dq = diff(q, "t");
  if (dq.is_const(0.0)) return constant(0.0);
  const Expr integrand = substitute(dq, "t", variable("s")) * sinh(variable("s"));
  return integral(integrand, "s", lower, variable("t"));
}

/// u = 1/2 sum ln(x_i^2 + xn_i^2) + L, v = sum arctan(x_i / xn_i), w = H.
inline TransformTriple log_arg_triple(int n, const Expr& ell, const Expr& h, Normalization nm = Normalization::Reeb) {
  for (const auto& e : {ell, h})
    for (const auto& v : free_vars(e))
      if (v != "t") throw ChartError("ell and h must depend on t only");
  Expr u = constant(0.0), v = constant(0.0);
  for (int k = 1; k <= n; ++k) {
    const Expr x = variable("x" + std::to_string(k));
    const Expr y = variable("xn" + std::to_string(k));
    u = u + 0.5 * log(pow(x, 2) + pow(y, 2));
    v = v + atan(x / y);
  }
  if (nm == Normalization::Reeb) return {u + reeb_lift(ell), v, reeb_lift(h)};
  return {u + ell, v, h};
}

// ---------------------------------------------------------------------------
// Random structures.

class CoefficientStream {
public:
  explicit CoefficientStream(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo = -1.0, double hi = 1.0) {
    return lo + (hi - lo) * (static_cast<double>(rng_() >> 11) * 0x1.0p-53);
  }
  /// Coefficient rounded to 4 decimals so serialized configs stay short and exact.
  double coefficient(double scale) { return std::round(uniform() * scale * 1e4) / 1e4; }

private:
  std::mt19937_64 rng_;
};

/// Random polynomial of total degree <= 2 in the given variables.
inline Expr random_polynomial(CoefficientStream& cs, const std::vector<std::string>& vars, double scale, bool with_constant = true) {
  Expr p = with_constant ? constant(cs.coefficient(scale)) : constant(0.0);
  for (std::size_t i = 0; i < vars.size(); ++i) p = p + cs.coefficient(scale) * variable(vars[i]);
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i; j < vars.size(); ++j) {
      const double c = cs.coefficient(scale);
      if (std::fabs(c) < 0.5 * scale) continue;  // keep the trees sparse
      p = p + c * variable(vars[i]) * variable(vars[j]);
    }
  return p;
}

/// Random polynomial of degree <= 2 with sup-norm at most bound on the box [0.5, 1.5]^m.
inline Expr bounded_polynomial(CoefficientStream& cs, const std::vector<std::string>& vars, double bound) {
  std::vector<double> c;
  c.push_back(cs.coefficient(1.0));
  for (std::size_t i = 0; i < vars.size(); ++i) c.push_back(cs.coefficient(1.0));
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i; j < vars.size(); ++j) c.push_back(cs.coefficient(1.0));
  double s = std::fabs(c[0]);
  for (std::size_t k = 1; k <= vars.size(); ++k) s += 1.5 * std::fabs(c[k]);
  for (std::size_t k = vars.size() + 1; k < c.size(); ++k) s += 2.25 * std::fabs(c[k]);
  const double f = s > 0.0 ? bound / s : 0.0;
  Expr p = constant(f * c[0]);
  std::size_t k = 1;
  for (std::size_t i = 0; i < vars.size(); ++i) p = p + (f * c[k++]) * variable(vars[i]);
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i; j < vars.size(); ++j) p = p + (f * c[k++]) * variable(vars[i]) * variable(vars[j]);
  return p;
}

using ExprMatrix = std::vector<std::vector<Expr>>;

inline ExprMatrix expr_matmul(const ExprMatrix& a, const ExprMatrix& b) {
  const std::size_t d = a.size();
  ExprMatrix r(d, std::vector<Expr>(d, constant(0.0)));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      Expr s = constant(0.0);
      for (std::size_t k = 0; k < d; ++k) s = s + a[i][k] * b[k][j];
      r[i][j] = s;
    }
  return r;
}

inline ExprMatrix expr_transpose(const ExprMatrix& a) {
  const std::size_t d = a.size();
  ExprMatrix r(d, std::vector<Expr>(d));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) r[i][j] = a[j][i];
  return r;
}

/// Inverse of a unit lower-triangular matrix by forward substitution.
inline ExprMatrix unit_lower_inverse(const ExprMatrix& l) {
  const std::size_t d = l.size();
  ExprMatrix r(d, std::vector<Expr>(d, constant(0.0)));
  for (std::size_t j = 0; j < d; ++j) {
    r[j][j] = constant(1.0);
    for (std::size_t i = j + 1; i < d; ++i) {
      Expr s = constant(0.0);
      for (std::size_t k = j; k < i; ++k) s = s + l[i][k] * r[k][j];
      r[i][j] = -s;
    }
  }
  return r;
}

struct RandomStructureOptions {
  double amplitude = 0.3;         // bound on |log| of the diagonal factor over the box
  double shear = 0.1;             // bound on the triangular entries over the box
  double max_condition = 1e4;     // rejected above this metric condition number
};

/// Pulls the flat model back through a random frame field Theta = D L U, which keeps
/// every pointwise axiom exact while making F nonzero in general.
inline ChartManifold random_structure(std::uint64_t seed, int n, RandomStructureOptions opt = {}) {
  const ChartManifold flat = build_flat_f0(n);
  if (opt.amplitude == 0.0) {
    ChartManifold m = flat;
    m.name = "random";
    return m;
  }
  const std::size_t d = static_cast<std::size_t>(2 * n + 1);
  for (int attempt = 0; attempt < 16; ++attempt) {
    CoefficientStream cs(seed * 1000003ULL + static_cast<std::uint64_t>(attempt));
    ExprMatrix L(d, std::vector<Expr>(d, constant(0.0))), U = L, Dg = L, Dinv = L;
    for (std::size_t i = 0; i < d; ++i) {
      L[i][i] = U[i][i] = constant(1.0);
      const Expr e = bounded_polynomial(cs, flat.coords, opt.amplitude);
      Dg[i][i] = exp(e);
      Dinv[i][i] = exp(-e);
      for (std::size_t j = 0; j < i; ++j) L[i][j] = bounded_polynomial(cs, flat.coords, opt.shear);
      for (std::size_t j = i + 1; j < d; ++j) U[i][j] = bounded_polynomial(cs, flat.coords, opt.shear);
    }
    const ExprMatrix theta = expr_matmul(Dg, expr_matmul(L, U));
    const ExprMatrix uinv = expr_transpose(unit_lower_inverse(expr_transpose(U)));
    const ExprMatrix theta_inv = expr_matmul(uinv, expr_matmul(unit_lower_inverse(L), Dinv));

    ChartManifold m;
    m.name = "random";
    m.n = n;
    m.coords = flat.coords;
    m.box = flat.box;
    m.metric = expr_matmul(expr_transpose(theta), expr_matmul(flat.metric, theta));
    m.phi = expr_matmul(theta_inv, expr_matmul(flat.phi, theta));
    m.xi.assign(d, constant(0.0));
    m.eta.assign(d, constant(0.0));
    for (std::size_t i = 0; i < d; ++i) {
      m.xi[i] = theta_inv[i][d - 1];
      m.eta[i] = theta[d - 1][i];
    }
    m.validate();
    bool ok = true;
    for (const auto& p : sample_points(m.box, 8, seed)) {
      try {
        const FrameEval fr = metric_at(m, p, 0);
        Eigen::MatrixXd g(d, d);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) g(i, j) = fr.metric()(i, j);
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues();
        ok = ok && sv(0) < opt.max_condition * sv(sv.size() - 1);
      } catch (const SingularMetric&) {
        ok = false;
      }
    }
    if (ok) return m;
  }
  throw ChartError("random structure: could not generate a nonsingular metric");
}

/// Random triple whose components are polynomials of degree <= 2.
inline TransformTriple random_polynomial_triple(std::uint64_t seed, const ChartManifold& m, double scale = 0.2) {
  CoefficientStream cs(seed ^ 0x9e3779b97f4a7c15ULL);
  TransformTriple tr;
  tr.u = random_polynomial(cs, m.coords, scale);
  tr.v = random_polynomial(cs, m.coords, scale);
  tr.w = random_polynomial(cs, m.coords, scale);
  return tr;
}

/// u + i v = P(z) with z_k = x_k + i xn_k and P a random complex polynomial of degree <= 2;
/// w a random polynomial in t.
inline TransformTriple phi_holomorphic_triple(std::uint64_t seed, int n, double scale = 0.2) {
  CoefficientStream cs(seed ^ 0x5851f42d4c957f2dULL);
  std::vector<ComplexExpr> z;
  for (int k = 1; k <= n; ++k) z.push_back({variable("x" + std::to_string(k)), variable("xn" + std::to_string(k))});
  auto coef = [&] { return ComplexExpr{constant(cs.coefficient(scale)), constant(cs.coefficient(scale))}; };
  ComplexExpr P = coef();
  auto add = [](ComplexExpr a, const ComplexExpr& b) { return ComplexExpr{a.re + b.re, a.im + b.im}; };
  for (std::size_t i = 0; i < z.size(); ++i) {
    P = add(P, coef() * z[i]);
    for (std::size_t j = i; j < z.size(); ++j) P = add(P, coef() * z[i] * z[j]);
  }
  const Expr t = variable("t");
  TransformTriple tr;
  tr.u = P.re;
  tr.v = P.im;
  tr.w = cs.coefficient(scale) * t + cs.coefficient(scale) * t * t;
  return tr;
}

// ---------------------------------------------------------------------------

inline std::vector<std::string> example_names() { return {"flat-f0", "hypersurface-f5", "random"}; }

inline ChartManifold build_example(const std::string& name, int n, std::uint64_t seed = 1) {
  if (name == "flat-f0") return build_flat_f0(n);
  if (name == "hypersurface-f5") return build_hypersurface(n).manifold;
  if (name == "random") return random_structure(seed, n);
  throw ChartError("unknown example '" + name + "'");
}

}  // namespace accr
