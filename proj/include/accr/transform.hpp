#pragma once

// Contact conformal transformations of an almost contact B-metric structure and the
// quantities they induce: alpha, beta, the Lee-form law, the closed form of the new F
// for F5 inputs, and the Yamabe soliton check along the new Reeb field.

#include "accr/structure.hpp"

#include <numeric>
#include <optional>

namespace accr {

struct TransformTriple {
  Expr u = constant(0.0);
  Expr v = constant(0.0);
  Expr w = constant(0.0);

  bool is_identity() const { return u.is_const(0.0) && v.is_const(0.0) && w.is_const(0.0); }
};

inline void validate_triple(const TransformTriple& tr, const ChartManifold& m) {
  std::set<std::string> names(m.coords.begin(), m.coords.end());
  for (const Expr* e : {&tr.u, &tr.v, &tr.w})
    for (const auto& v : free_vars(*e))
      if (!names.count(v)) throw ChartError("transformation uses unknown variable '" + v + "'");
}

/// gbar = e^{2u}cos2v g + e^{2u}sin2v gtilde + (e^{2w} - e^{2u}cos2v - e^{2u}sin2v) eta (x) eta,
/// xibar = e^{-w} xi, etabar = e^{w} eta, phi unchanged.
inline ChartManifold transform_structure(const ChartManifold& m, const TransformTriple& tr) {
  validate_triple(tr, m);
  if (tr.is_identity()) return m;
  const std::size_t d = static_cast<std::size_t>(m.dim());
  const Expr e2u = exp(2.0 * tr.u);
  const Expr A = e2u * cos(2.0 * tr.v);
  const Expr B = e2u * sin(2.0 * tr.v);
  const Expr C = exp(2.0 * tr.w) - A - B;
  ChartManifold out = m;
  out.name = m.name + "/transformed";
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const Expr ee = m.eta[i] * m.eta[j];
      Expr gt = ee;
      for (std::size_t a = 0; a < d; ++a) gt = gt + m.metric[i][a] * m.phi[a][j];
      const Expr gij = A * m.metric[i][j] + B * gt + C * ee;
      out.metric[i][j] = gij;
      out.metric[j][i] = gij;
    }
  const Expr emw = exp(-tr.w);
  const Expr ew = exp(tr.w);
  for (std::size_t i = 0; i < d; ++i) {
    out.xi[i] = emw * m.xi[i];
    out.eta[i] = ew * m.eta[i];
  }
  return out;
}

// ---------------------------------------------------------------------------

struct TriplePoint {
  Jet u, v, w;
  RealTensor du, dv, dw;
};

inline TriplePoint eval_triple(PointContext& ctx, const TransformTriple& tr) {
  TriplePoint tp{ctx(tr.u), ctx(tr.v), ctx(tr.w), {}, {}, {}};
  const int d = ctx.dim();
  tp.du = RealTensor::covector(d);
  tp.dv = RealTensor::covector(d);
  tp.dw = RealTensor::covector(d);
  for (int i = 0; i < d; ++i) {
    tp.du(i) = tp.u.d(i);
    tp.dv(i) = tp.v.d(i);
    tp.dw(i) = tp.w.d(i);
  }
  return tp;
}

struct AlphaBeta {
  RealTensor alpha;  // du o phi + dv
  RealTensor beta;   // du - dv o phi
  double albt2_first = 0.0;   // |alpha o phi^2 + beta o phi|
  double albt2_second = 0.0;  // |alpha o phi - beta o phi^2|
  double albtxi_alpha = 0.0;  // |alpha(xibar) - dv(xibar)|
  double albtxi_beta = 0.0;   // |beta(xibar) - du(xibar)|
};

inline AlphaBeta alpha_beta_at(const StructureEval& s, const TriplePoint& tp) {
  const int d = s.dim();
  AlphaBeta r;
  r.alpha = compose(tp.du, s.phi()) + tp.dv;
  r.beta = tp.du - compose(tp.dv, s.phi());
  const RealTensor a2 = compose(r.alpha, s.phi2()), b1 = compose(r.beta, s.phi());
  const RealTensor a1 = compose(r.alpha, s.phi()), b2 = compose(r.beta, s.phi2());
  for (int i = 0; i < d; ++i) {
    r.albt2_first = std::max(r.albt2_first, std::fabs(a2(i) + b1(i)));
    r.albt2_second = std::max(r.albt2_second, std::fabs(a1(i) - b2(i)));
  }
  const RealTensor xibar = s.xi() * std::exp(-tp.w.value());
  r.albtxi_alpha = std::fabs(pairing(r.alpha, xibar) - pairing(tp.dv, xibar));
  r.albtxi_beta = std::fabs(pairing(r.beta, xibar) - pairing(tp.du, xibar));
  return r;
}

struct LeeLawResiduals {
  double theta = 0.0;       // |thetabar - theta - 2n alpha|
  double theta_star = 0.0;  // |thetabar* - theta* - 2n beta|
  double omega = 0.0;       // |omegabar - omega - dw o phi|
};

inline LeeLawResiduals lee_transformation_check(const StructureEval& s, const StructureEval& sbar, const TriplePoint& tp) {
  const AlphaBeta ab = alpha_beta_at(s, tp);
  const double two_n = 2.0 * s.n();
  LeeLawResiduals r;
  r.theta = max_abs(sbar.lee().theta - s.lee().theta - ab.alpha * two_n);
  r.theta_star = max_abs(sbar.lee().theta_star - s.lee().theta_star - ab.beta * two_n);
  r.omega = max_abs(sbar.lee().omega - s.lee().omega - compose(tp.dw, s.phi()));
  return r;
}

/// Recovers g(phi., phi.) and g(., phi.) from gbar.
inline double metric_round_trip_residual(const StructureEval& s, const StructureEval& sbar, const TriplePoint& tp) {
  const int d = s.dim();
  const double e = std::exp(-2.0 * tp.u.value());
  const double c = e * std::cos(2.0 * tp.v.value()), sn = e * std::sin(2.0 * tp.v.value());
  double r = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double pp = c * sbar.g_phiphi()(i, j) + sn * sbar.g_phi()(i, j);
      const double p1 = c * sbar.g_phi()(i, j) - sn * sbar.g_phiphi()(i, j);
      r = std::max({r, std::fabs(pp - s.g_phiphi()(i, j)), std::fabs(p1 - s.g_phi()(i, j))});
    }
  return r;
}

// ---------------------------------------------------------------------------

class NotF5Input : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct FbarFormula {
  RealTensor closed;       // expressed through g
  RealTensor closed_gbar;  // expressed through gbar
  double deviation = 0.0;       // max |closed - Fbar|
  double deviation_gbar = 0.0;  // max |closed_gbar - Fbar|
  double f_over_k = 0.0;
};

/// Closed-form Fbar for an F5 input, compared with Fbar computed from gbar directly.
inline FbarFormula fbar_f5_formula_at(const StructureEval& s, const StructureEval& sbar, const TriplePoint& tp,
                                      const Tolerances& tol = {}) {
  const ClassResiduals cr = class_residuals(s, tol);
  if (!cr.is_f5) throw NotF5Input("input structure is not of class F5 at the sample point");
  const int d = s.dim();
  FbarFormula r;
  r.f_over_k = pairing(s.lee().theta_star, s.xi()) / (2.0 * s.n());
  const AlphaBeta ab = alpha_beta_at(s, tp);
  const double c = std::cos(2.0 * tp.v.value()), sn = std::sin(2.0 * tp.v.value());
  const RealTensor bf = ab.beta + s.eta() * r.f_over_k;
  const RealTensor lambda = ab.alpha * c + bf * sn;
  const RealTensor mu = bf * c - ab.alpha * sn;
  const RealTensor dwphi = compose(tp.dw, s.phi());
  const double e2u = std::exp(2.0 * tp.u.value()), e2w = std::exp(2.0 * tp.w.value());
  const RealTensor& P = s.g_phiphi();
  const RealTensor& Q = s.g_phi();
  const RealTensor& Pb = sbar.g_phiphi();
  const RealTensor& Qb = sbar.g_phi();
  const RealTensor& eb = sbar.eta();
  const RealTensor& e = s.eta();
  r.closed = RealTensor::trilinear(d);
  r.closed_gbar = RealTensor::trilinear(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        r.closed(i, j, k) = -e2u * (lambda(k) * P(i, j) + lambda(j) * P(i, k) + mu(k) * Q(i, j) + mu(j) * Q(i, k)) +
                            e2w * e(i) * (e(j) * dwphi(k) + e(k) * dwphi(j));
        r.closed_gbar(i, j, k) = -ab.alpha(k) * Pb(i, j) - bf(k) * Qb(i, j) - ab.alpha(j) * Pb(i, k) - bf(j) * Qb(i, k) +
                                 eb(i) * (eb(j) * dwphi(k) + eb(k) * dwphi(j));
      }
  r.deviation = max_abs(r.closed - sbar.F());
  r.deviation_gbar = max_abs(r.closed_gbar - sbar.F());
  return r;
}

// ---------------------------------------------------------------------------

/// Pointwise data of an original structure, its transform and the triple.
class TransformPoint {
public:
  TransformPoint(const ChartManifold& m, const ChartManifold& mbar, const TransformTriple& tr, std::span<const double> p,
                 int order)
      : s_(m, p, 1), sbar_(mbar, p, order), tp_(eval_triple(s_.context(), tr)) {
    xibar_jets_ = sbar_.xi_jets();
  }
  const StructureEval& original() const { return s_; }
  const StructureEval& transformed() const { return sbar_; }
  const TriplePoint& triple() const { return tp_; }
  const JetTensor& xibar_jets() const { return xibar_jets_; }

private:
  StructureEval s_;
  StructureEval sbar_;
  TriplePoint tp_;
  JetTensor xibar_jets_;
};

struct TheoremConditions {
  double f_over_k = 0.0;
  double du_xi = 0.0;         // |du(xi) + f/k|
  double dv_xi = 0.0;         // |dv(xi)|
  double dw_vertical = 0.0;   // |dw - dw(xi) eta|
  double dw_phi2 = 0.0;       // |dw o phi^2|, horizontal-constant test for w
  double holomorphic_first = 0.0;   // |du o phi - dv o phi^2|
  double holomorphic_second = 0.0;  // |du o phi^2 + dv o phi|
  double du_phi_minus_dv = 0.0;     // |du o phi - dv|
};

/// f/k is taken from the torse-forming identification of xi itself, which for a vertical
/// torse-forming field vartheta = k xi gives exactly f/k of vartheta.
inline TheoremConditions theorem_conditions_at(const StructureEval& s, const TriplePoint& tp, const Tolerances& tol = {}) {
  const int d = s.dim();
  const TorseFormingReport tf = torse_forming_analyze(s, s.xi_jets(), tol);
  TheoremConditions c;
  c.f_over_k = tf.f / tf.k;
  c.du_xi = std::fabs(pairing(tp.du, s.xi()) + c.f_over_k);
  c.dv_xi = std::fabs(pairing(tp.dv, s.xi()));
  const double dwxi = pairing(tp.dw, s.xi());
  const RealTensor dw2 = compose(tp.dw, s.phi2());
  const RealTensor u1 = compose(tp.du, s.phi()), u2 = compose(tp.du, s.phi2());
  const RealTensor v1 = compose(tp.dv, s.phi()), v2 = compose(tp.dv, s.phi2());
  for (int i = 0; i < d; ++i) {
    c.dw_vertical = std::max(c.dw_vertical, std::fabs(tp.dw(i) - dwxi * s.eta()(i)));
    c.dw_phi2 = std::max(c.dw_phi2, std::fabs(dw2(i)));
    c.holomorphic_first = std::max(c.holomorphic_first, std::fabs(u1(i) - v2(i)));
    c.holomorphic_second = std::max(c.holomorphic_second, std::fabs(u2(i) + v1(i)));
    c.du_phi_minus_dv = std::max(c.du_phi_minus_dv, std::fabs(u1(i) - tp.dv(i)));
  }
  return c;
}

/// Lee-form conclusions for the transformed structure.
struct LeeConclusions {
  double theta = 0.0;        // |thetabar - 2n(du o phi + dv)|
  double theta_star = 0.0;   // |thetabar* + 2n(du o phi^2 + dv o phi)|
  double omega = 0.0;        // |omegabar|
  double alpha = 0.0;        // |alpha - thetabar / 2n|
  double beta = 0.0;         // |beta - thetabar*/2n + (f/k) eta|
  double dw_phi = 0.0;       // |dw o phi - omegabar|
  double theta_horizontal = 0.0;       // |thetabar + thetabar o phi^2|
  double theta_star_horizontal = 0.0;  // |thetabar* + thetabar* o phi^2|
};

inline LeeConclusions lee_conclusions_at(const StructureEval& s, const StructureEval& sbar, const TriplePoint& tp, double f_over_k) {
  const double two_n = 2.0 * s.n();
  const LeeForms& L = sbar.lee();
  const AlphaBeta ab = alpha_beta_at(s, tp);
  LeeConclusions c;
  c.theta = max_abs(L.theta - (compose(tp.du, s.phi()) + tp.dv) * two_n);
  c.theta_star = max_abs(L.theta_star + (compose(tp.du, s.phi2()) + compose(tp.dv, s.phi())) * two_n);
  c.omega = max_abs(L.omega);
  c.alpha = max_abs(ab.alpha - L.theta * (1.0 / two_n));
  c.beta = max_abs(ab.beta - L.theta_star * (1.0 / two_n) + s.eta() * f_over_k);
  c.dw_phi = max_abs(compose(tp.dw, s.phi()) - L.omega);
  c.theta_horizontal = max_abs(L.theta + compose(L.theta, s.phi2()));
  c.theta_star_horizontal = max_abs(L.theta_star + compose(L.theta_star, s.phi2()));
  return c;
}

// ---------------------------------------------------------------------------

struct SolitonPoint {
  Point point;
  double tau = 0.0;
  RealTensor lie;               // L_xibar gbar, coordinate formula
  double lie_discrepancy = 0.0; // coordinate vs covariant formula
  RealTensor gbar;
  RealTensor gbar_phiphi, gbar_phi;
  RealTensor etabar;
  RealTensor dw_phi2;
  double du_xibar = 0.0, dv_xibar = 0.0, w = 0.0;
  std::optional<double> f_over_k;  // present for F5 inputs
};

inline SolitonPoint soliton_point(const TransformPoint& tp, const Tolerances& tol = {}) {
  const StructureEval& sb = tp.transformed();
  const StructureEval& s = tp.original();
  SolitonPoint sp;
  sp.point = sb.point();
  sp.tau = sb.frame().scalar_curvature();
  const LieDerivative L = lie_derivative_metric(sb.frame(), tp.xibar_jets());
  sp.lie = L.coordinate;
  sp.lie_discrepancy = L.discrepancy;
  sp.gbar = sb.g();
  sp.gbar_phiphi = sb.g_phiphi();
  sp.gbar_phi = sb.g_phi();
  sp.etabar = sb.eta();
  sp.dw_phi2 = compose(tp.triple().dw, s.phi2());
  sp.du_xibar = pairing(tp.triple().du, sb.xi());
  sp.dv_xibar = pairing(tp.triple().dv, sb.xi());
  sp.w = tp.triple().w.value();
  if (class_residuals(s, tol).is_f5) sp.f_over_k = pairing(s.lee().theta_star, s.xi()) / (2.0 * s.n());
  return sp;
}

struct SolitonPointResiduals {
  double soliton = 0.0;  // |1/2 L - (tau - sigma) gbar|
  double killing = 0.0;  // |L|
  double tsdw = 0.0;     // |2(tau - sigma) etabar - dw o phi^2|
  double lxi0 = -1.0;    // |L - closed form|, -1 when not applicable
  double lxi00 = -1.0;   // |2(tau-sigma)(-gbar(phi,phi) + etabar etabar) - closed form|
};

inline SolitonPointResiduals soliton_residuals(const SolitonPoint& sp, double sigma) {
  const int d = sp.gbar.dim();
  SolitonPointResiduals r;
  const double ts = sp.tau - sigma;
  RealTensor diff = sp.lie * 0.5 - sp.gbar * ts;
  r.soliton = euclidean_norm(diff);
  r.killing = euclidean_norm(sp.lie);
  for (int i = 0; i < d; ++i) r.tsdw = std::max(r.tsdw, std::fabs(2.0 * ts * sp.etabar(i) - sp.dw_phi2(i)));
  if (sp.f_over_k) {
    const double coeff = sp.du_xibar + *sp.f_over_k * std::exp(-sp.w);
    r.lxi0 = 0.0;
    r.lxi00 = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double rhs = 2.0 * (sp.dv_xibar * sp.gbar_phi(i, j) - coeff * sp.gbar_phiphi(i, j)) +
                           sp.etabar(i) * sp.dw_phi2(j) + sp.etabar(j) * sp.dw_phi2(i);
        r.lxi0 = std::max(r.lxi0, std::fabs(sp.lie(i, j) - rhs));
        const double lhs = 2.0 * ts * (-sp.gbar_phiphi(i, j) + sp.etabar(i) * sp.etabar(j));
        r.lxi00 = std::max(r.lxi00, std::fabs(lhs - rhs));
      }
  }
  return r;
}

struct SolitonReport {
  double sigma = 0.0;
  bool sigma_pinned = false;
  std::vector<double> tau;
  double tau_mean = 0.0;
  double tau_std = 0.0;
  std::vector<SolitonPointResiduals> points;
  double max_soliton = 0.0;
  double max_killing = 0.0;
  double max_lie_discrepancy = 0.0;
  double max_tsdw = 0.0;
  double max_lxi0 = -1.0;
  double max_lxi00 = -1.0;
  bool soliton_holds = false;
  bool constant_curvature = false;
};

/// Checks 1/2 L_xibar gbar = (tau - sigma) gbar over sample points; sigma defaults to mean tau.
inline SolitonReport yamabe_check(const std::vector<SolitonPoint>& pts, std::optional<double> sigma, const Tolerances& tol = {}) {
  SolitonReport r;
  for (const auto& p : pts) {
    if (!std::isfinite(p.tau)) throw DomainError("non-finite scalar curvature at a sample point");
    r.tau.push_back(p.tau);
  }
  const double cnt = static_cast<double>(std::max<std::size_t>(pts.size(), 1));
  r.tau_mean = std::accumulate(r.tau.begin(), r.tau.end(), 0.0) / cnt;
  double var = 0.0;
  for (double t : r.tau) var += (t - r.tau_mean) * (t - r.tau_mean);
  r.tau_std = std::sqrt(var / cnt);
  r.sigma_pinned = sigma.has_value();
  r.sigma = sigma.value_or(r.tau_mean);
  for (const auto& p : pts) {
    const auto pr = soliton_residuals(p, r.sigma);
    r.points.push_back(pr);
    r.max_soliton = std::max(r.max_soliton, pr.soliton);
    r.max_killing = std::max(r.max_killing, pr.killing);
    r.max_lie_discrepancy = std::max(r.max_lie_discrepancy, p.lie_discrepancy);
    r.max_tsdw = std::max(r.max_tsdw, pr.tsdw);
    r.max_lxi0 = std::max(r.max_lxi0, pr.lxi0);
    r.max_lxi00 = std::max(r.max_lxi00, pr.lxi00);
  }
  r.constant_curvature = r.tau_std / (1.0 + std::fabs(r.tau_mean)) < tol["soliton"];
  r.soliton_holds = r.max_soliton < tol["soliton"] && r.constant_curvature;
  return r;
}

}  // namespace accr
