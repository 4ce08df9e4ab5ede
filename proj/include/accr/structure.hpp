#pragma once

// Almost contact B-metric structure at a point: axioms, the fundamental tensor F,
// Lee forms, class residuals and torse-forming vector fields.

#include "accr/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <string>

namespace accr {

/// Named tolerances with defaults; any entry can be overridden.
class Tolerances {
public:
  Tolerances()
      : values_{{"structural", 1e-9}, {"derived", 1e-8},   {"class", 1e-6},    {"class_floor", 1e-10},
                {"torse", 1e-7},      {"lee_law", 1e-7},   {"soliton", 1e-6},  {"condition", 1e-8},
                {"negative", 1e-3},   {"symmetry", 1e-12}, {"transform", 1e-7}, {"formula", 1e-7}} {}

  double operator[](const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw std::out_of_range("unknown tolerance '" + name + "'");
    return it->second;
  }
  void set(const std::string& name, double value) {
    if (!values_.count(name)) throw std::out_of_range("unknown tolerance '" + name + "'");
    if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("tolerance must be finite and >= 0");
    values_[name] = value;
  }
  const std::map<std::string, double>& all() const { return values_; }

private:
  std::map<std::string, double> values_;
};

// ---------------------------------------------------------------------------

struct LeeForms {
  RealTensor theta;       // horizontal trace g^{ij} F(E_i, E_j, .)
  RealTensor theta_star;  // g^{ij} F(E_i, phi E_j, .)
  RealTensor omega;       // F(xi, xi, .)
};

/// All structure data evaluated at a chart point.
class StructureEval {
public:
  StructureEval(const ChartManifold& m, std::span<const double> p, int order)
      : n_(m.n), ctx_(std::make_unique<PointContext>(m.coords, p, std::max(order, 1))), frame_(*ctx_, m.metric) {
    phi_j_ = ctx_->endomorphism(m.phi);
    xi_j_ = ctx_->vector(m.xi);
    eta_j_ = ctx_->covector(m.eta);
    phi_ = values(phi_j_);
    xi_ = values(xi_j_);
    eta_ = values(eta_j_);
    const int d = dim();
    const RealTensor& g = frame_.metric();
    gphi_ = matmul(g, phi_);                                 // g(x, phi y)
    RealTensor pt(d, {Slot::Down, Slot::Up}, 0.0);           // phi transposed
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) pt(i, j) = phi_(j, i);
    gphiphi_ = matmul(pt, gphi_);                            // g(phi x, phi y)
    gtilde_ = gphi_;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) gtilde_(i, j) += eta_(i) * eta_(j);
    phi2_ = matmul(phi_, phi_);

    nabla_phi_ = covariant_derivative(frame_, phi_j_);  // (i, a, j) = (nabla_i phi)^a_j
    f_ = RealTensor::trilinear(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += g(k, l) * nabla_phi_(i, l, j);
          f_(i, j, k) = s;
        }
    compute_lee();
  }

  int n() const { return n_; }
  int dim() const { return 2 * n_ + 1; }
  const Point& point() const { return frame_.point(); }
  PointContext& context() const { return *ctx_; }
  const FrameEval& frame() const { return frame_; }
  const RealTensor& g() const { return frame_.metric(); }
  const RealTensor& ginv() const { return frame_.inverse(); }
  const RealTensor& phi() const { return phi_; }
  const RealTensor& phi2() const { return phi2_; }
  const RealTensor& xi() const { return xi_; }
  const RealTensor& eta() const { return eta_; }
  const JetTensor& phi_jets() const { return phi_j_; }
  const JetTensor& xi_jets() const { return xi_j_; }
  const JetTensor& eta_jets() const { return eta_j_; }
  /// g(x, phi y)
  const RealTensor& g_phi() const { return gphi_; }
  /// g(phi x, phi y)
  const RealTensor& g_phiphi() const { return gphiphi_; }
  const RealTensor& gtilde() const { return gtilde_; }
  const RealTensor& nabla_phi() const { return nabla_phi_; }
  const RealTensor& F() const { return f_; }
  const LeeForms& lee() const { return lee_; }

  /// Scale of the terms entering F, used as the reference for "F = 0" decisions.
  double f_term_scale() const {
    double dphi = 0.0;
    for (std::size_t f = 0; f < phi_j_.size(); ++f)
      for (int i = 0; i < dim(); ++i) dphi = std::max(dphi, std::fabs(phi_j_[f].d(i)));
    return max_abs(g()) * (dphi + 2.0 * dim() * max_abs(frame_.christoffel()) * max_abs(phi_));
  }

private:
  void compute_lee() {
    const int d = dim();
    const RealTensor& gi = frame_.inverse();
    lee_.theta = RealTensor::covector(d);
    lee_.theta_star = RealTensor::covector(d);
    lee_.omega = RealTensor::covector(d);
    for (int k = 0; k < d; ++k) {
      double full = 0.0, star = 0.0, om = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          full += gi(i, j) * f_(i, j, k);
          om += xi_(i) * xi_(j) * f_(i, j, k);
          double fp = 0.0;
          for (int a = 0; a < d; ++a) fp += f_(i, a, k) * phi_(a, j);
          star += gi(i, j) * fp;
        }
      lee_.theta(k) = full - om;
      lee_.theta_star(k) = star;
      lee_.omega(k) = om;
    }
  }

  int n_;
  std::unique_ptr<PointContext> ctx_;
  FrameEval frame_;
  JetTensor phi_j_, xi_j_, eta_j_;
  RealTensor phi_, xi_, eta_, phi2_, gphi_, gphiphi_, gtilde_, nabla_phi_, f_;
  LeeForms lee_;
};

// ---------------------------------------------------------------------------

struct AxiomResiduals {
  double phi_xi = 0.0;        // |phi xi|
  double phi_squared = 0.0;   // |phi^2 + I - eta (x) xi|
  double eta_phi = 0.0;       // |eta o phi|
  double eta_xi = 0.0;        // |eta(xi) - 1|
  double b_metric = 0.0;      // |g + g(phi., phi.) - eta (x) eta|
  double gtilde_symmetry = 0.0;
  Signature g_signature;
  Signature gtilde_signature;
  bool signature_ok = false;

  double max_structural() const { return std::max({phi_xi, phi_squared, eta_phi, eta_xi, b_metric}); }
};

inline AxiomResiduals check_axioms(const StructureEval& s) {
  const int d = s.dim();
  AxiomResiduals r;
  const RealTensor phixi = apply(s.phi(), s.xi());
  r.phi_xi = max_abs(phixi);
  for (int a = 0; a < d; ++a)
    for (int j = 0; j < d; ++j)
      r.phi_squared = std::max(r.phi_squared, std::fabs(s.phi2()(a, j) + (a == j ? 1.0 : 0.0) - s.xi()(a) * s.eta()(j)));
  r.eta_phi = max_abs(compose(s.eta(), s.phi()));
  r.eta_xi = std::fabs(pairing(s.eta(), s.xi()) - 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      r.b_metric = std::max(r.b_metric, std::fabs(s.g()(i, j) + s.g_phiphi()(i, j) - s.eta()(i) * s.eta()(j)));
      r.gtilde_symmetry = std::max(r.gtilde_symmetry, std::fabs(s.gtilde()(i, j) - s.gtilde()(j, i)));
    }
  r.g_signature = signature(s.g());
  r.gtilde_signature = signature(s.gtilde());
  const Signature want{s.n() + 1, s.n(), 0};
  r.signature_ok = r.g_signature == want && r.gtilde_signature == want;
  return r;
}

// ---------------------------------------------------------------------------

struct FIdentityResiduals {
  double symmetric_yz = 0.0;  // F(X,Y,Z) - F(X,Z,Y)
  double decomposition = 0.0; // F(X,Y,Z) - F(X,phiY,phiZ) - eta(Y)F(X,xi,Z) - eta(Z)F(X,Y,xi)
  double eta_relation = 0.0;  // F(X,phiY,xi) - (nabla_X eta)Y
  double lee_relation = 0.0;  // theta* o phi + theta o phi^2
  double omega_xi = 0.0;      // omega(xi)
};

/// Contracts F(X, Y, xi) as the matrix (i, j).
inline RealTensor f_with_xi(const StructureEval& s) {
  const int d = s.dim();
  RealTensor r = RealTensor::bilinear(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double v = 0.0;
      for (int k = 0; k < d; ++k) v += s.F()(i, j, k) * s.xi()(k);
      r(i, j) = v;
    }
  return r;
}

inline FIdentityResiduals f_identities(const StructureEval& s) {
  const int d = s.dim();
  const RealTensor& F = s.F();
  const RealTensor& ph = s.phi();
  FIdentityResiduals r;
  const RealTensor fxi = f_with_xi(s);
  // F(X, xi, Z)
  RealTensor fxz = RealTensor::bilinear(d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) {
      double v = 0.0;
      for (int j = 0; j < d; ++j) v += F(i, j, k) * s.xi()(j);
      fxz(i, k) = v;
    }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        r.symmetric_yz = std::max(r.symmetric_yz, std::fabs(F(i, j, k) - F(i, k, j)));
        double pp = 0.0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) pp += F(i, a, b) * ph(a, j) * ph(b, k);
        const double rhs = pp + s.eta()(j) * fxz(i, k) + s.eta()(k) * fxi(i, j);
        r.decomposition = std::max(r.decomposition, std::fabs(F(i, j, k) - rhs));
      }
  const RealTensor neta = covariant_derivative(s.frame(), s.eta_jets());  // (i, j) = (nabla_i eta)_j
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double v = 0.0;
      for (int a = 0; a < d; ++a) v += fxi(i, a) * ph(a, j);
      r.eta_relation = std::max(r.eta_relation, std::fabs(v - neta(i, j)));
    }
  const RealTensor lhs = compose(s.lee().theta_star, ph);
  const RealTensor rhs = compose(s.lee().theta, s.phi2());
  for (int k = 0; k < d; ++k) r.lee_relation = std::max(r.lee_relation, std::fabs(lhs(k) + rhs(k)));
  r.omega_xi = std::fabs(pairing(s.lee().omega, s.xi()));
  return r;
}

// ---------------------------------------------------------------------------

/// F^1 built from the Lee form theta.
inline RealTensor f1_component(const StructureEval& s) {
  const int d = s.dim();
  const RealTensor tp = compose(s.lee().theta, s.phi());
  const RealTensor tpp = compose(s.lee().theta, s.phi2());
  const RealTensor& P = s.g_phiphi();
  const RealTensor& Q = s.g_phi();
  const double c = 1.0 / (2.0 * s.n());
  RealTensor r = RealTensor::trilinear(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        r(i, j, k) = c * (P(i, j) * tpp(k) + Q(i, j) * tp(k) + P(i, k) * tpp(j) + Q(i, k) * tp(j));
  return r;
}

/// F^5 built from theta*(xi).
inline RealTensor f5_component(const StructureEval& s) {
  const int d = s.dim();
  const double c = -pairing(s.lee().theta_star, s.xi()) / (2.0 * s.n());
  const RealTensor& Q = s.g_phi();
  RealTensor r = RealTensor::trilinear(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) r(i, j, k) = c * (Q(i, j) * s.eta()(k) + Q(i, k) * s.eta()(j));
  return r;
}

struct NormPair {
  double euclidean = 0.0;
  double metric = 0.0;
};

inline NormPair norms(const RealTensor& t, const RealTensor& ginv) { return {euclidean_norm(t), metric_norm(t, ginv)}; }

struct ClassResiduals {
  NormPair f;
  NormPair minus_f1;
  NormPair minus_f5;
  NormPair minus_f1_f5;
  double fxi_symmetric = 0.0;  // F(x,y,xi) - F(y,x,xi)
  double fxi_phi = 0.0;        // F(x,y,xi) + F(phi x, phi y, xi)
  double term_scale = 0.0;
  bool is_f0 = false;
  bool is_f1 = false;
  bool is_f5 = false;
  bool is_f1_plus_f5 = false;
};

inline ClassResiduals class_residuals(const StructureEval& s, const Tolerances& tol = {}) {
  const int d = s.dim();
  const RealTensor f1 = f1_component(s);
  const RealTensor f5 = f5_component(s);
  ClassResiduals r;
  r.f = norms(s.F(), s.ginv());
  r.minus_f1 = norms(s.F() - f1, s.ginv());
  r.minus_f5 = norms(s.F() - f5, s.ginv());
  r.minus_f1_f5 = norms(s.F() - f1 - f5, s.ginv());
  const RealTensor fxi = f_with_xi(s);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      r.fxi_symmetric = std::max(r.fxi_symmetric, std::fabs(fxi(i, j) - fxi(j, i)));
      double pp = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) pp += fxi(a, b) * s.phi()(a, i) * s.phi()(b, j);
      r.fxi_phi = std::max(r.fxi_phi, std::fabs(fxi(i, j) + pp));
    }
  r.term_scale = s.f_term_scale();
  const double floor = tol["class_floor"];
  const double rel = tol["class"];
  r.is_f0 = r.f.euclidean <= std::max(rel * r.term_scale, floor);
  const double bound = std::max(rel * r.f.euclidean, floor);
  r.is_f1 = r.is_f0 || r.minus_f1.euclidean <= bound;
  r.is_f5 = r.is_f0 || r.minus_f5.euclidean <= bound;
  r.is_f1_plus_f5 = r.is_f0 || r.minus_f1_f5.euclidean <= bound;
  return r;
}

// ---------------------------------------------------------------------------

struct TorseFormingReport {
  double k = 0.0;           // eta(vartheta)
  double g_xi = 0.0;        // g(vartheta, xi)
  double length = 0.0;      // sqrt|g(vartheta, vartheta)|
  double f = 0.0;
  RealTensor gamma;
  double residual = 0.0;          // |nabla vartheta - f I - vartheta (x) gamma|
  double relative_residual = 0.0; // residual / max(|nabla vartheta|, 1e-300)
  bool torse_forming = false;
  double verticality = 0.0;  // |vartheta - k xi|
  bool vertical = false;
  // vertical-case identities
  double dk_residual = 0.0;        // dk - f eta - k gamma
  double nabla_xi_residual = 0.0;  // nabla xi + (f/k) phi^2
  double f_xi_residual = 0.0;      // F(x,y,xi) + (f/k) g(x, phi y)
  double lee_theta_xi = 0.0;       // theta(xi)
  double lee_theta_star_xi = 0.0;  // theta*(xi) - 2n f/k
  double lee_omega = 0.0;          // |omega|
  double lee_theta_horizontal = 0.0;       // theta + theta o phi^2
  double lee_theta_star_horizontal = 0.0;  // theta* + theta* o phi^2 - 2n (f/k) eta
};

/// Identifies nabla vartheta = f I + vartheta (x) gamma by least squares.
inline TorseFormingReport torse_forming_analyze(const StructureEval& s, const JetTensor& field, const Tolerances& tol = {}) {
  const int d = s.dim();
  const RealTensor v = values(field);
  if (max_abs(v) == 0.0) throw DomainError("torse-forming field vanishes at the sample point");
  const RealTensor A = covariant_derivative(s.frame(), field);  // (i, a) = (nabla_i vartheta)^a
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d * d, d + 1);
  Eigen::VectorXd b(d * d);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < d; ++a) {
      const int row = i * d + a;
      b(row) = A(i, a);
      if (i == a) M(row, 0) = 1.0;
      M(row, 1 + i) = v(a);
    }
  const Eigen::VectorXd x = M.colPivHouseholderQr().solve(b);
  TorseFormingReport r;
  r.f = x(0);
  r.gamma = RealTensor::covector(d);
  for (int i = 0; i < d; ++i) r.gamma(i) = x(1 + i);
  r.residual = (M * x - b).norm();
  const double an = euclidean_norm(A);
  r.relative_residual = an > 0.0 ? r.residual / an : 0.0;
  r.torse_forming = r.residual <= tol["torse"] * an + tol["class_floor"];

  r.k = pairing(s.eta(), v);
  double gx = 0.0, gg = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      gx += s.g()(i, j) * v(i) * s.xi()(j);
      gg += s.g()(i, j) * v(i) * v(j);
    }
  r.g_xi = gx;
  r.length = std::sqrt(std::fabs(gg));
  RealTensor vert = v;
  for (int i = 0; i < d; ++i) vert(i) -= r.k * s.xi()(i);
  r.verticality = euclidean_norm(vert);
  r.vertical = r.verticality <= tol["structural"] * std::max(1.0, euclidean_norm(v));
  if (!r.vertical || r.k == 0.0) return r;

  const double fk = r.f / r.k;
  // k = eta_i vartheta^i as a jet
  Jet kj(field[0].space(), 0.0);
  for (int i = 0; i < d; ++i) kj += s.eta_jets()(i) * field(i);
  for (int i = 0; i < d; ++i)
    r.dk_residual = std::max(r.dk_residual, std::fabs(kj.d(i) - r.f * s.eta()(i) - r.k * r.gamma(i)));
  const RealTensor nxi = covariant_derivative(s.frame(), s.xi_jets());
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < d; ++a) r.nabla_xi_residual = std::max(r.nabla_xi_residual, std::fabs(nxi(i, a) + fk * s.phi2()(a, i)));
  const RealTensor fxi = f_with_xi(s);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r.f_xi_residual = std::max(r.f_xi_residual, std::fabs(fxi(i, j) + fk * s.g_phi()(i, j)));
  const LeeForms& L = s.lee();
  r.lee_theta_xi = std::fabs(pairing(L.theta, s.xi()));
  r.lee_theta_star_xi = std::fabs(pairing(L.theta_star, s.xi()) - 2.0 * s.n() * fk);
  r.lee_omega = max_abs(L.omega);
  const RealTensor tpp = compose(L.theta, s.phi2());
  const RealTensor spp = compose(L.theta_star, s.phi2());
  for (int i = 0; i < d; ++i) {
    r.lee_theta_horizontal = std::max(r.lee_theta_horizontal, std::fabs(L.theta(i) + tpp(i)));
    r.lee_theta_star_horizontal =
        std::max(r.lee_theta_star_horizontal, std::fabs(L.theta_star(i) + spp(i) - 2.0 * s.n() * fk * s.eta()(i)));
  }
  return r;
}

}  // namespace accr
