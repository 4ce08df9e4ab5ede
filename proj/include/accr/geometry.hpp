#pragma once

// Chart-level pseudo-Riemannian machinery: metric jets, inverse, Levi-Civita
// connection, curvature, covariant and Lie derivatives, all evaluated at a
// single chart point from exact jets of the component expressions.

#include "accr/expr.hpp"
#include "accr/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace accr {

using Point = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};
using Box = std::vector<Interval>;

class SingularMetric : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ChartError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A (2n+1)-dimensional coordinate chart carrying a metric and an almost contact structure.
struct ChartManifold {
  std::string name;
  int n = 1;
  std::vector<std::string> coords;
  std::vector<std::vector<Expr>> metric;  // g_ij
  std::vector<std::vector<Expr>> phi;     // phi^i_j, image of e_j in column j
  std::vector<Expr> xi;                   // xi^i
  std::vector<Expr> eta;                  // eta_i
  Box box;

  int dim() const { return 2 * n + 1; }

  void validate() const {
    const auto d = static_cast<std::size_t>(dim());
    if (n < 1) throw ChartError("chart: n must be at least 1");
    if (coords.size() != d) throw ChartError("chart: expected " + std::to_string(d) + " coordinates");
    auto square = [&](const auto& m, const char* what) {
      if (m.size() != d) throw ChartError(std::string("chart: ") + what + " must be " + std::to_string(d) + "x" + std::to_string(d));
      for (const auto& row : m)
        if (row.size() != d) throw ChartError(std::string("chart: ") + what + " must be square");
    };
    square(metric, "metric");
    square(phi, "phi");
    if (xi.size() != d) throw ChartError("chart: xi must have " + std::to_string(d) + " components");
    if (eta.size() != d) throw ChartError("chart: eta must have " + std::to_string(d) + " components");
    if (box.size() != d) throw ChartError("chart: box must have " + std::to_string(d) + " intervals");
    for (const auto& iv : box)
      if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi)) throw ChartError("chart: box bounds must be finite with lo < hi");
    std::set<std::string> names(coords.begin(), coords.end());
    if (names.size() != d) throw ChartError("chart: duplicate coordinate names");
    auto check = [&](const Expr& e) {
      for (const auto& v : free_vars(e))
        if (!names.count(v)) throw ChartError("chart: expression uses unknown variable '" + v + "'");
    };
    for (const auto& row : metric)
      for (const auto& e : row) check(e);
    for (const auto& row : phi)
      for (const auto& e : row) check(e);
    for (const auto& e : xi) check(e);
    for (const auto& e : eta) check(e);
  }
};

// ---------------------------------------------------------------------------
// Deterministic sampling. Uses raw 64-bit draws so results do not depend on the
// standard library's distribution implementations.

inline std::vector<Point> sample_points(const Box& box, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Point p;
    for (const auto& iv : box) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      p.push_back(iv.lo + (iv.hi - iv.lo) * u);
    }
    pts.push_back(std::move(p));
  }
  return pts;
}

// ---------------------------------------------------------------------------

/// Shared jet evaluator for all fields of a chart at one point.
class PointContext {
public:
  PointContext(const std::vector<std::string>& coords, std::span<const double> p, int order)
      : point_(p.begin(), p.end()), space_{static_cast<int>(coords.size()), order}, ev_(bindings(coords, p, space_), space_) {}

  const Point& point() const { return point_; }
  JetSpace space() const { return space_; }
  int dim() const { return space_.vars; }
  int order() const { return space_.order; }

  Jet operator()(const Expr& e) { return ev_(e); }

  JetTensor bilinear(const std::vector<std::vector<Expr>>& m) {
    return matrix(m, {Slot::Down, Slot::Down});
  }
  JetTensor endomorphism(const std::vector<std::vector<Expr>>& m) { return matrix(m, {Slot::Up, Slot::Down}); }
  JetTensor vector(const std::vector<Expr>& v) { return list(v, Slot::Up); }
  JetTensor covector(const std::vector<Expr>& v) { return list(v, Slot::Down); }

private:
  static Evaluator<Jet>::Bindings bindings(const std::vector<std::string>& coords, std::span<const double> p,
                                           JetSpace space) {
    if (p.size() != coords.size()) throw std::invalid_argument("point dimension does not match the chart");
    Evaluator<Jet>::Bindings b;
    for (std::size_t i = 0; i < coords.size(); ++i) b.emplace(coords[i], Jet::variable(static_cast<int>(i), p[i], space));
    return b;
  }

  JetTensor matrix(const std::vector<std::vector<Expr>>& m, std::vector<Slot> slots) {
    const int d = dim();
    JetTensor t(d, std::move(slots), Jet(space_, 0.0));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) t(i, j) = ev_(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    return t;
  }
  JetTensor list(const std::vector<Expr>& v, Slot s) {
    const int d = dim();
    JetTensor t(d, {s}, Jet(space_, 0.0));
    for (int i = 0; i < d; ++i) t(i) = ev_(v[static_cast<std::size_t>(i)]);
    return t;
  }

  Point point_;
  JetSpace space_;
  Evaluator<Jet> ev_;
};

// ---------------------------------------------------------------------------

struct InverseResult {
  JetTensor inverse;
  double determinant = 0.0;
};

/// Jet-valued inverse by LU with partial pivoting on the value part.
inline InverseResult invert_metric(const JetTensor& g) {
  const int d = g.dim();
  const JetSpace sp = g[0].space();
  std::vector<std::vector<Jet>> a(static_cast<std::size_t>(d), std::vector<Jet>(static_cast<std::size_t>(d), Jet(sp, 0.0)));
  std::vector<std::vector<Jet>> inv = a;
  double scale = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = g(i, j);
      scale = std::max(scale, std::fabs(g(i, j).value()));
    }
  for (int i = 0; i < d; ++i) inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = Jet(sp, 1.0);

  double det = 1.0, min_pivot = std::numeric_limits<double>::infinity();
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::fabs(a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)].value()) >
          std::fabs(a[static_cast<std::size_t>(piv)][static_cast<std::size_t>(col)].value()))
        piv = r;
    if (piv != col) {
      std::swap(a[static_cast<std::size_t>(piv)], a[static_cast<std::size_t>(col)]);
      std::swap(inv[static_cast<std::size_t>(piv)], inv[static_cast<std::size_t>(col)]);
      det = -det;
    }
    const Jet& p = a[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
    det *= p.value();
    min_pivot = std::min(min_pivot, std::fabs(p.value()));
    if (p.value() == 0.0) throw SingularMetric("metric is singular");
    const Jet rp = reciprocal(p);
    for (int j = 0; j < d; ++j) {
      a[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] *= rp;
      inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)] *= rp;
    }
    for (int r = 0; r < d; ++r) {
      if (r == col) continue;
      const Jet f = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
      for (int j = 0; j < d; ++j) {
        a[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] -= f * a[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
        inv[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] -= f * inv[static_cast<std::size_t>(col)][static_cast<std::size_t>(j)];
      }
    }
  }
  if (!(min_pivot >= 1e-12 * scale)) throw SingularMetric("metric is singular (pivot below threshold)");
  JetTensor out(d, {Slot::Up, Slot::Up}, Jet(sp, 0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return {std::move(out), det};
}

struct Signature {
  int positive = 0;
  int negative = 0;
  int zero = 0;
  friend bool operator==(const Signature&, const Signature&) = default;
};

inline Signature signature(const RealTensor& sym) {
  const int d = sym.dim();
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = 0.5 * (sym(i, j) + sym(j, i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Signature s;
  for (int i = 0; i < d; ++i) {
    const double ev = es.eigenvalues()(i);
    if (ev > tol) ++s.positive;
    else if (ev < -tol) ++s.negative;
    else ++s.zero;
  }
  return s;
}

// ---------------------------------------------------------------------------

/// Pointwise metric data: g, its inverse, first derivatives, Christoffel symbols and,
/// for order >= 2, curvature.
class FrameEval {
public:
  FrameEval(PointContext& ctx, const std::vector<std::vector<Expr>>& metric_exprs)
      : point_(ctx.point()), dim_(ctx.dim()), order_(ctx.order()) {
    JetTensor raw = ctx.bilinear(metric_exprs);
    // symmetry enforced numerically
    double scale = 1.0;
    for (std::size_t i = 0; i < raw.size(); ++i) scale = std::max(scale, std::fabs(raw[i].value()));
    for (int i = 0; i < dim_; ++i)
      for (int j = i + 1; j < dim_; ++j) {
        const double asym = std::fabs(raw(i, j).value() - raw(j, i).value());
        if (asym > 1e-12 * scale) throw ChartError("metric is not symmetric at the sample point");
        Jet avg = (raw(i, j) + raw(j, i)) * 0.5;
        raw(i, j) = avg;
        raw(j, i) = avg;
      }
    g_ = std::move(raw);
    auto inv = invert_metric(g_);
    ginv_ = std::move(inv.inverse);
    det_ = inv.determinant;
    gv_ = values(g_);
    giv_ = values(ginv_);
    if (order_ >= 1) build_connection();
    if (order_ >= 2) build_curvature();
  }

  const Point& point() const { return point_; }
  int dim() const { return dim_; }
  int order() const { return order_; }
  double determinant() const { return det_; }

  const JetTensor& metric_jets() const { return g_; }
  const JetTensor& inverse_jets() const { return ginv_; }
  const RealTensor& metric() const { return gv_; }
  const RealTensor& inverse() const { return giv_; }

  /// dg(k, i, j) = d_k g_ij as jets of order K-1.
  const JetTensor& metric_derivative_jets() const {
    require(1);
    return dg_;
  }
  /// Gamma^k_ij as jets of order K-1.
  const JetTensor& christoffel_jets() const {
    require(1);
    return gamma_;
  }
  const RealTensor& christoffel() const {
    require(1);
    return gammav_;
  }
  /// R^l_ijk.
  const RealTensor& riemann() const {
    require(2);
    return riemann_;
  }
  const RealTensor& ricci() const {
    require(2);
    return ricci_;
  }
  double scalar_curvature() const {
    require(2);
    return scalar_;
  }

  /// Largest |(nabla_k g)_ij|.
  double metricity_residual() const {
    require(1);
    double res = 0.0;
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) {
          double v = dg_(k, i, j).value();
          for (int l = 0; l < dim_; ++l) v -= gammav_(l, k, i) * gv_(l, j) + gammav_(l, k, j) * gv_(i, l);
          res = std::max(res, std::fabs(v));
        }
    return res;
  }

  double torsion_residual() const {
    require(1);
    double res = 0.0;
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) res = std::max(res, std::fabs(gammav_(k, i, j) - gammav_(k, j, i)));
    return res;
  }

private:
  void require(int k) const {
    if (order_ < k) throw std::logic_error("frame: jet order " + std::to_string(k) + " required");
  }

  void build_connection() {
    const JetSpace low{dim_, order_ - 1};
    dg_ = JetTensor(dim_, {Slot::Down, Slot::Down, Slot::Down}, Jet(low, 0.0));
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) dg_(k, i, j) = g_(i, j).derivative(k);
    std::vector<Jet> gi;
    gi.reserve(ginv_.size());
    for (std::size_t f = 0; f < ginv_.size(); ++f) gi.push_back(ginv_[f].truncated(order_ - 1));
    // first kind: [ij, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    JetTensor first(dim_, {Slot::Down, Slot::Down, Slot::Down}, Jet(low, 0.0));
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int l = 0; l < dim_; ++l) first(i, j, l) = (dg_(i, j, l) + dg_(j, i, l) - dg_(l, i, j)) * 0.5;
    gamma_ = JetTensor(dim_, {Slot::Up, Slot::Down, Slot::Down}, Jet(low, 0.0));
    for (int k = 0; k < dim_; ++k)
      for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) {
          Jet s(low, 0.0);
          for (int l = 0; l < dim_; ++l) s += gi[static_cast<std::size_t>(k * dim_ + l)] * first(i, j, l);
          gamma_(k, i, j) = s;
          gamma_(k, j, i) = s;
        }
    gammav_ = values(gamma_);
  }

  void build_curvature() {
    const int d = dim_;
    // dGamma(m, l, i, j) = d_m Gamma^l_ij
    RealTensor dgam(d, {Slot::Down, Slot::Up, Slot::Down, Slot::Down}, 0.0);
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int m = 0; m < d; ++m) dgam(m, l, i, j) = gamma_(l, i, j).d(m);
    riemann_ = RealTensor(d, {Slot::Up, Slot::Down, Slot::Down, Slot::Down}, 0.0);
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) {
            double r = dgam(j, l, i, k) - dgam(k, l, i, j);
            for (int m = 0; m < d; ++m) r += gammav_(l, j, m) * gammav_(m, i, k) - gammav_(l, k, m) * gammav_(m, i, j);
            riemann_(l, i, j, k) = r;
          }
    ricci_ = RealTensor::bilinear(d);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += riemann_(l, i, l, k);
        ricci_(i, k) = s;
      }
    scalar_ = 0.0;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) scalar_ += giv_(i, k) * ricci_(i, k);
  }

  Point point_;
  int dim_;
  int order_;
  double det_ = 0.0;
  JetTensor g_, ginv_, dg_, gamma_;
  RealTensor gv_, giv_, gammav_, riemann_, ricci_;
  double scalar_ = 0.0;
};

inline FrameEval metric_at(const ChartManifold& m, std::span<const double> p, int order) {
  PointContext ctx(m.coords, p, order);
  return FrameEval(ctx, m.metric);
}

/// Covariant derivative of a jet-valued tensor field; the derivative index is prepended
/// as a covariant slot: result(i, ...) = (nabla_i T)(...).
inline RealTensor covariant_derivative(const FrameEval& frame, const JetTensor& field) {
  const int d = field.dim();
  std::vector<Slot> slots{Slot::Down};
  slots.insert(slots.end(), field.slots().begin(), field.slots().end());
  RealTensor out(d, slots, 0.0);
  const RealTensor& gam = frame.christoffel();
  const RealTensor fv = values(field);
  for (std::size_t f = 0; f < field.size(); ++f) {
    const auto idx = field.unflatten(f);
    for (int i = 0; i < d; ++i) {
      double v = field[f].d(i);
      for (std::size_t s = 0; s < idx.size(); ++s) {
        auto moved = idx;
        for (int c = 0; c < d; ++c) {
          moved[s] = c;
          const double comp = fv[fv.flatten(moved)];
          if (field.slots()[s] == Slot::Up) v += gam(idx[s], i, c) * comp;
          else v -= gam(c, i, idx[s]) * comp;
        }
      }
      std::vector<int> oidx{i};
      oidx.insert(oidx.end(), idx.begin(), idx.end());
      out[out.flatten(oidx)] = v;
    }
  }
  return out;
}

struct LieDerivative {
  RealTensor coordinate;  // V^k d_k g_ij + g_kj d_i V^k + g_ik d_j V^k
  RealTensor covariant;   // g(nabla_i V, e_j) + g(e_i, nabla_j V)
  double discrepancy = 0.0;
};

/// Lie derivative of the metric along a jet-valued vector field, by both formulas.
inline LieDerivative lie_derivative_metric(const FrameEval& frame, const JetTensor& v) {
  const int d = frame.dim();
  const RealTensor& g = frame.metric();
  const RealTensor vv = values(v);
  const RealTensor nv = covariant_derivative(frame, v);  // nv(i, k) = (nabla_i V)^k
  LieDerivative r{RealTensor::bilinear(d), RealTensor::bilinear(d), 0.0};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double c = 0.0;
      double cov = 0.0;
      for (int k = 0; k < d; ++k) {
        c += vv(k) * frame.metric_jets()(i, j).d(k) + g(k, j) * v(k).d(i) + g(i, k) * v(k).d(j);
        cov += g(k, j) * nv(i, k) + g(i, k) * nv(j, k);
      }
      r.coordinate(i, j) = c;
      r.covariant(i, j) = cov;
      r.discrepancy = std::max(r.discrepancy, std::fabs(c - cov));
    }
  return r;
}

inline double scalar_curvature_at(const ChartManifold& m, std::span<const double> p, int order = 2) {
  return metric_at(m, p, std::max(order, 2)).scalar_curvature();
}

}  // namespace accr
