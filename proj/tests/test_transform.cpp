#include "accr/cli.hpp"
#include "accr/examples.hpp"
#include "accr/transform.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace accr;
using cli::hypersurface_triple;
using cli::preset_triple;

namespace {

struct TheoremRun {
  std::vector<SolitonPoint> points;
  double max_condition_du = 0.0, max_condition_dv = 0.0, max_condition_dw = 0.0;
  double max_lee = 0.0;
};

TheoremRun run_theorem(const ChartManifold& m, const TransformTriple& tr, std::size_t samples, int order = 3) {
  const ChartManifold mbar = transform_structure(m, tr);
  TheoremRun r;
  for (const auto& p : sample_points(m.box, samples, 42)) {
    const TransformPoint tp(m, mbar, tr, p, order);
    r.points.push_back(soliton_point(tp));
    const TheoremConditions c = theorem_conditions_at(tp.original(), tp.triple());
    r.max_condition_du = std::max(r.max_condition_du, c.du_xi);
    r.max_condition_dv = std::max(r.max_condition_dv, c.dv_xi);
    r.max_condition_dw = std::max(r.max_condition_dw, c.dw_vertical);
    const LeeConclusions lc = lee_conclusions_at(tp.original(), tp.transformed(), tp.triple(), c.f_over_k);
    r.max_lee = std::max({r.max_lee, lc.theta, lc.theta_star, lc.omega, lc.alpha, lc.beta, lc.dw_phi});
  }
  return r;
}

double metric_gap(const ChartManifold& a, const ChartManifold& b, const Point& p) {
  const StructureEval sa(a, p, 0), sb(b, p, 0);
  return std::max({max_abs(sa.g() - sb.g()), max_abs(sa.phi() - sb.phi()), max_abs(sa.xi() - sb.xi()),
                   max_abs(sa.eta() - sb.eta())});
}

}  // namespace

TEST(Transform, AlphaBetaOnFlatModel) {
  // u = x1, v = 0 on the flat model: alpha = dx1 o phi, beta = dx1
  const ChartManifold m = build_flat_f0(1);
  StructureEval s(m, Point{0.6, 1.1, 0.9}, 1);
  const TriplePoint tp = eval_triple(s.context(), {variable("x1"), constant(0.0), constant(0.0)});
  const AlphaBeta ab = alpha_beta_at(s, tp);
  RealTensor dx1 = RealTensor::covector(3);
  dx1(0) = 1.0;
  EXPECT_LT(max_abs(ab.beta - dx1), 1e-15);
  EXPECT_LT(max_abs(ab.alpha - compose(dx1, s.phi())), 1e-15);
  EXPECT_LT(ab.albt2_first, 1e-15);
  EXPECT_LT(ab.albt2_second, 1e-15);
}

TEST(Transform, AlphaBetaRelationsOnRandomPairs) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ChartManifold m = random_structure(seed, 2);
    const TransformTriple tr = random_polynomial_triple(seed, m);
    for (const auto& p : sample_points(m.box, 4, seed)) {
      StructureEval s(m, p, 1);
      const AlphaBeta ab = alpha_beta_at(s, eval_triple(s.context(), tr));
      EXPECT_LT(ab.albt2_first, 1e-12);
      EXPECT_LT(ab.albt2_second, 1e-12);
      EXPECT_LT(ab.albtxi_alpha, 1e-12);
      EXPECT_LT(ab.albtxi_beta, 1e-12);
    }
  }
}

TEST(Transform, IdentityLeavesStructureUnchanged) {
  const HypersurfaceChart h = build_hypersurface(2);
  const ChartManifold mbar = transform_structure(h.manifold, {});
  for (const auto& p : sample_points(h.manifold.box, 4, 1)) {
    EXPECT_EQ(metric_gap(h.manifold, mbar, p), 0.0);
    StructureEval s(h.manifold, p, 1), sb(mbar, p, 1);
    EXPECT_EQ(max_abs(sb.lee().theta - s.lee().theta), 0.0);
    EXPECT_EQ(max_abs(sb.F() - s.F()), 0.0);
  }
}

TEST(Transform, PureVerticalRescaling) {
  const HypersurfaceChart h = build_hypersurface(1);
  const Expr w = 0.3 * variable("t") * variable("x1");
  const ChartManifold mbar = transform_structure(h.manifold, {constant(0.0), constant(0.0), w});
  for (const auto& p : sample_points(h.manifold.box, 6, 2)) {
    StructureEval s(h.manifold, p, 0), sb(mbar, p, 0);
    const double ew = std::exp(0.3 * p[2] * p[0]);
    EXPECT_LT(max_abs(sb.g() - s.g() - outer(s.eta(), s.eta()) * (ew * ew - 1.0)), 1e-12);
    EXPECT_LT(max_abs(sb.xi() - s.xi() * (1.0 / ew)), 1e-12);
    EXPECT_LT(max_abs(sb.eta() - s.eta() * ew), 1e-12);
    EXPECT_EQ(max_abs(sb.phi() - s.phi()), 0.0);
  }
}

TEST(Transform, MetricRoundTrip) {
  const ChartManifold m = random_structure(4, 2);
  const TransformTriple tr = random_polynomial_triple(4, m);
  const ChartManifold mbar = transform_structure(m, tr);
  for (const auto& p : sample_points(m.box, 8, 3)) {
    const TransformPoint tp(m, mbar, tr, p, 1);
    EXPECT_LT(metric_round_trip_residual(tp.original(), tp.transformed(), tp.triple()), 1e-12);
  }
}

TEST(Transform, RandomPairsKeepAxiomsAndLeeLaw) {
  const Tolerances tol;
  double worst_axiom = 0.0, worst_law = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const ChartManifold m = random_structure(seed, seed % 2 ? 1 : 2);
    const TransformTriple tr = random_polynomial_triple(seed, m);
    const ChartManifold mbar = transform_structure(m, tr);
    for (const auto& p : sample_points(m.box, 2, seed)) {
      const TransformPoint tp(m, mbar, tr, p, 1);
      const AxiomResiduals ax = check_axioms(tp.transformed());
      EXPECT_TRUE(ax.signature_ok) << seed;
      worst_axiom = std::max({worst_axiom, ax.max_structural(), ax.gtilde_symmetry});
      const LeeLawResiduals ll = lee_transformation_check(tp.original(), tp.transformed(), tp.triple());
      worst_law = std::max({worst_law, ll.theta, ll.theta_star, ll.omega});
    }
  }
  EXPECT_LT(worst_axiom, tol["derived"]);
  EXPECT_LT(worst_law, tol["lee_law"]);
}

TEST(Transform, TriplesComposeAdditively) {
  const ChartManifold m = random_structure(8, 1);
  const TransformTriple t1 = random_polynomial_triple(1, m), t2 = random_polynomial_triple(2, m);
  const ChartManifold twice = transform_structure(transform_structure(m, t1), t2);
  const ChartManifold once = transform_structure(m, {t1.u + t2.u, t1.v + t2.v, t1.w + t2.w});
  for (const auto& p : sample_points(m.box, 8, 5)) EXPECT_LT(metric_gap(twice, once, p), 1e-9);
}

TEST(Transform, FbarFormulaIdentityAndConstantW) {
  const HypersurfaceChart h = build_hypersurface(2);
  for (const TransformTriple& tr : {TransformTriple{}, TransformTriple{constant(0.0), constant(0.0), constant(0.4)},
                                    TransformTriple{constant(0.2), constant(0.3), constant(-0.1)}}) {
    const ChartManifold mbar = transform_structure(h.manifold, tr);
    for (const auto& p : sample_points(h.manifold.box, 4, 6)) {
      const TransformPoint tp(h.manifold, mbar, tr, p, 1);
      const FbarFormula f = fbar_f5_formula_at(tp.original(), tp.transformed(), tp.triple());
      const double scale = std::max(1.0, max_abs(tp.transformed().F()));
      EXPECT_LT(f.deviation / scale, 1e-9);
      EXPECT_LT(f.deviation_gbar / scale, 1e-9);
      EXPECT_NEAR(f.f_over_k, 1.0 / std::cosh(p[4]), 1e-9);
    }
  }
}

TEST(Transform, FbarFormulaForGeneralTriples) {
  const HypersurfaceChart h = build_hypersurface(2);
  for (const TransformTriple& tr : {hypersurface_triple(2, Normalization::Reeb), random_polynomial_triple(3, h.manifold)}) {
    const ChartManifold mbar = transform_structure(h.manifold, tr);
    for (const auto& p : sample_points(h.manifold.box, 4, 7)) {
      const TransformPoint tp(h.manifold, mbar, tr, p, 1);
      const FbarFormula f = fbar_f5_formula_at(tp.original(), tp.transformed(), tp.triple());
      const double scale = std::max(1.0, max_abs(tp.transformed().F()));
      EXPECT_LT(f.deviation / scale, 1e-7);
      EXPECT_LT(f.deviation_gbar / scale, 1e-7);
    }
  }
}

TEST(Transform, FbarFormulaRejectsNonF5Input) {
  const ChartManifold m = random_structure(2, 1);
  const TransformTriple tr = random_polynomial_triple(2, m);
  const TransformPoint tp(m, transform_structure(m, tr), tr, Point{1.0, 1.0, 1.0}, 1);
  EXPECT_THROW((void)fbar_f5_formula_at(tp.original(), tp.transformed(), tp.triple()), NotF5Input);
}

TEST(Transform, HypersurfaceTripleSatisfiesConditionsAndLeeConclusions) {
  const HypersurfaceChart h = build_hypersurface(2);
  const TheoremRun r = run_theorem(h.manifold, hypersurface_triple(2, Normalization::Reeb), 8);
  EXPECT_LT(r.max_condition_du, 1e-8);
  EXPECT_LT(r.max_condition_dv, 1e-8);
  EXPECT_LT(r.max_condition_dw, 1e-8);
  EXPECT_LT(r.max_lee, 1e-7);
  // xibar is Killing for gbar
  const SolitonReport s = yamabe_check(r.points, std::nullopt);
  EXPECT_LT(s.max_killing, 1e-6);
  EXPECT_LT(s.max_lie_discrepancy, 1e-7);
}

TEST(Transform, RawNormalizationBreaksDuCondition) {
  const HypersurfaceChart h = build_hypersurface(2);
  const TheoremRun r = run_theorem(h.manifold, hypersurface_triple(2, Normalization::Raw), 4, 2);
  EXPECT_GT(r.max_condition_du, 1e-3);
}

TEST(Transform, NegativeControlsFailTheirCondition) {
  const HypersurfaceChart h = build_hypersurface(2);
  const TheoremRun du = run_theorem(h.manifold, preset_triple("negative-du", h.manifold, 1), 4, 2);
  const TheoremRun dv = run_theorem(h.manifold, preset_triple("negative-dv", h.manifold, 1), 4, 2);
  const TheoremRun dw = run_theorem(h.manifold, preset_triple("negative-dw", h.manifold, 1), 4, 2);
  EXPECT_GT(du.max_condition_du, 1e-3);
  EXPECT_LT(du.max_condition_dv, 1e-8);
  EXPECT_GT(dv.max_condition_dv, 1e-3);
  EXPECT_LT(dv.max_condition_du, 1e-8);
  EXPECT_GT(dw.max_condition_dw, 1e-3);
  for (const TheoremRun* r : {&du, &dv, &dw}) {
    const SolitonReport s = yamabe_check(r->points, std::nullopt);
    EXPECT_GT(s.max_soliton, 1e-3);
    EXPECT_FALSE(s.soliton_holds);
  }
}

TEST(Transform, MinimalTripleGivesSoliton) {
  const HypersurfaceChart h = build_hypersurface(2);
  const TheoremRun r = run_theorem(h.manifold, preset_triple("minimal", h.manifold, 1), 8);
  EXPECT_LT(r.max_condition_du, 1e-8);
  const SolitonReport s = yamabe_check(r.points, std::nullopt);
  EXPECT_TRUE(s.soliton_holds);
  EXPECT_LT(s.max_soliton, 1e-6);
  EXPECT_LT(s.max_tsdw, 1e-6);
  EXPECT_GE(s.max_lxi00, 0.0);
  EXPECT_LT(s.max_lxi00, 1e-6);
  EXPECT_LT(s.max_lxi0, 1e-6);
  EXPECT_LT(s.tau_std / (1.0 + std::fabs(s.tau_mean)), 1e-6);
}

TEST(Transform, FlatIdentityIsSolitonWithZeroSigma) {
  const ChartManifold m = build_flat_f0(2);
  const TheoremRun r = run_theorem(m, {}, 4, 2);
  const SolitonReport s = yamabe_check(r.points, 0.0);
  EXPECT_TRUE(s.sigma_pinned);
  EXPECT_TRUE(s.soliton_holds);
  EXPECT_EQ(s.tau_mean, 0.0);
  EXPECT_LT(s.max_soliton, 1e-12);
}

TEST(Transform, TripleValidation) {
  const ChartManifold m = build_flat_f0(1);
  EXPECT_THROW((void)transform_structure(m, {variable("q"), constant(0.0), constant(0.0)}), ChartError);
}
