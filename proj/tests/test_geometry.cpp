#include "accr/examples.hpp"
#include "accr/geometry.hpp"
#include "accr/structure.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace accr;

namespace {

using Matrix = std::vector<std::vector<Expr>>;

Matrix sphere_metric(double radius) {
  const Expr r2 = constant(radius * radius);
  return {{r2, constant(0.0)}, {constant(0.0), r2 * pow(sin(variable("th")), 2)}};
}

Matrix polar_metric() { return {{constant(1.0), constant(0.0)}, {constant(0.0), pow(variable("r"), 2)}}; }

/// Koszul formula with central differences of plain metric values.
RealTensor christoffel_fd(const std::vector<std::string>& coords, const Matrix& g, const Point& p, double h = 1e-5) {
  const int d = static_cast<int>(coords.size());
  auto metric_values = [&](const Point& q) {
    std::map<std::string, double> b;
    for (int i = 0; i < d; ++i) b[coords[static_cast<std::size_t>(i)]] = q[static_cast<std::size_t>(i)];
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = eval(g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], b);
    return m;
  };
  std::vector<Eigen::MatrixXd> dg;
  for (int k = 0; k < d; ++k) {
    Point a = p, b = p;
    a[static_cast<std::size_t>(k)] += h;
    b[static_cast<std::size_t>(k)] -= h;
    dg.push_back((metric_values(a) - metric_values(b)) / (2 * h));
  }
  const Eigen::MatrixXd gi = metric_values(p).inverse();
  RealTensor gam(d, {Slot::Up, Slot::Down, Slot::Down}, 0.0);
  for (int k = 0; k < d; ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += 0.5 * gi(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gam(k, i, j) = s;
      }
  return gam;
}

FrameEval frame_for(const std::vector<std::string>& coords, const Matrix& g, const Point& p, int order) {
  PointContext ctx(coords, p, order);
  return FrameEval(ctx, g);
}

}  // namespace

TEST(Geometry, FlatModelMetricIsConstant) {
  const ChartManifold m = build_flat_f0(2);
  const Point p{0.7, 1.1, 0.9, 1.3, 0.6};
  const FrameEval f = metric_at(m, p, 2);
  const std::vector<double> diag{1, 1, -1, -1, 1};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      EXPECT_EQ(f.metric()(i, j), i == j ? diag[static_cast<std::size_t>(i)] : 0.0);
      for (int k = 0; k < 5; ++k) EXPECT_EQ(f.metric_jets()(i, j).d(k), 0.0);
    }
  EXPECT_EQ(max_abs(f.christoffel()), 0.0);
  EXPECT_EQ(f.scalar_curvature(), 0.0);
}

TEST(Geometry, BMetricSignature) {
  for (int n = 1; n <= 3; ++n) {
    const ChartManifold m = build_flat_f0(n);
    const Signature s = signature(metric_at(m, Point(static_cast<std::size_t>(2 * n + 1), 1.0), 0).metric());
    EXPECT_EQ(s.positive, n + 1);
    EXPECT_EQ(s.negative, n);
    EXPECT_EQ(s.zero, 0);
  }
  const HypersurfaceChart h = build_hypersurface(2);
  for (const auto& p : sample_points(h.manifold.box, 8, 3)) {
    const Signature s = signature(metric_at(h.manifold, p, 0).metric());
    EXPECT_EQ(s.positive, 3);
    EXPECT_EQ(s.negative, 2);
  }
}

TEST(Geometry, SphereMetricAtEquator) {
  const FrameEval f = frame_for({"th", "ph"}, sphere_metric(1.0), {std::numbers::pi / 2, 0.3}, 1);
  EXPECT_NEAR(f.metric()(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(f.metric()(1, 1), 1.0, 1e-15);
  EXPECT_EQ(f.metric()(0, 1), 0.0);
}

TEST(Geometry, ChristoffelSphereAndPolar) {
  const FrameEval s = frame_for({"th", "ph"}, sphere_metric(1.0), {1.0, 0.4}, 1);
  EXPECT_NEAR(s.christoffel()(0, 1, 1), -std::sin(1.0) * std::cos(1.0), 1e-14);
  EXPECT_NEAR(s.christoffel()(1, 0, 1), std::cos(1.0) / std::sin(1.0), 1e-14);
  const RealTensor fd = christoffel_fd({"th", "ph"}, sphere_metric(1.0), {1.0, 0.4});
  EXPECT_LT(max_abs(s.christoffel() - fd), 1e-8);

  const FrameEval pol = frame_for({"r", "ph"}, polar_metric(), {1.7, 0.2}, 1);
  EXPECT_NEAR(pol.christoffel()(0, 1, 1), -1.7, 1e-14);
  EXPECT_NEAR(pol.christoffel()(1, 0, 1), 1.0 / 1.7, 1e-14);
  EXPECT_LT(max_abs(pol.christoffel() - christoffel_fd({"r", "ph"}, polar_metric(), {1.7, 0.2})), 1e-8);
}

TEST(Geometry, ChristoffelMatchesKoszulOracleOnRandomStructures) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ChartManifold m = random_structure(seed, 1);
    for (const auto& p : sample_points(m.box, 3, seed)) {
      const FrameEval f = metric_at(m, p, 1);
      const RealTensor fd = christoffel_fd(m.coords, m.metric, p);
      EXPECT_LT(max_abs(f.christoffel() - fd), 1e-6 * std::max(1.0, max_abs(fd)));
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) EXPECT_EQ(f.christoffel()(k, i, j), f.christoffel()(k, j, i));
    }
  }
}

TEST(Geometry, ScalarCurvatureOfSpheres) {
  for (double th : {0.4, 1.0, 2.2}) {
    EXPECT_NEAR(frame_for({"th", "ph"}, sphere_metric(1.0), {th, 0.1}, 2).scalar_curvature(), 2.0, 1e-12);
    EXPECT_NEAR(frame_for({"th", "ph"}, sphere_metric(3.0), {th, 0.1}, 2).scalar_curvature(), 2.0 / 9.0, 1e-12);
  }
  EXPECT_NEAR(frame_for({"r", "ph"}, polar_metric(), {1.3, 0.1}, 2).scalar_curvature(), 0.0, 1e-13);
}

TEST(Geometry, RiemannSymmetriesAndBianchi) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const ChartManifold m = random_structure(seed, 1);
    for (const auto& p : sample_points(m.box, 3, seed)) {
      const FrameEval f = metric_at(m, p, 2);
      const RealTensor& R = f.riemann();
      const double scale = std::max(1.0, max_abs(R));
      double anti = 0.0, bianchi = 0.0, ricci_sym = 0.0;
      for (int l = 0; l < 3; ++l)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
              anti = std::max(anti, std::fabs(R(l, i, j, k) + R(l, i, k, j)));
              bianchi = std::max(bianchi, std::fabs(R(l, i, j, k) + R(l, j, k, i) + R(l, k, i, j)));
            }
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) ricci_sym = std::max(ricci_sym, std::fabs(f.ricci()(i, k) - f.ricci()(k, i)));
      EXPECT_LT(anti / scale, 1e-9);
      EXPECT_LT(bianchi / scale, 1e-9);
      EXPECT_LT(ricci_sym / scale, 1e-9);
      EXPECT_LT(f.metricity_residual(), 1e-9);
      EXPECT_LT(f.torsion_residual(), 1e-9);
    }
  }
}

TEST(Geometry, ContractionLowersValence) {
  const FrameEval f = frame_for({"th", "ph"}, sphere_metric(1.0), {1.0, 0.4}, 2);
  const RealTensor ric = contract(f.riemann(), 0, 2);
  EXPECT_EQ(ric.rank(), 2);
  EXPECT_EQ(ric.size(), 4u);
  EXPECT_LT(max_abs(ric - f.ricci()), 1e-15);
  EXPECT_EQ(f.riemann().size(), 16u);
  EXPECT_THROW((void)contract(f.ricci(), 0, 1), std::invalid_argument);
}

TEST(Geometry, MetricityAndConstantField) {
  const HypersurfaceChart h = build_hypersurface(2);
  for (const auto& p : sample_points(h.manifold.box, 4, 5)) {
    PointContext ctx(h.manifold.coords, p, 1);
    FrameEval f(ctx, h.manifold.metric);
    EXPECT_LT(max_abs(covariant_derivative(f, f.metric_jets())), 1e-9);
  }
  const ChartManifold flat = build_flat_f0(1);
  PointContext ctx(flat.coords, Point{0.8, 1.2, 0.9}, 1);
  FrameEval f(ctx, flat.metric);
  EXPECT_EQ(max_abs(covariant_derivative(f, ctx.vector({constant(1.0), constant(-2.0), constant(0.5)}))), 0.0);
}

TEST(Geometry, ReebFieldDerivativeOnHypersurface) {
  const HypersurfaceChart h = build_hypersurface(2);
  const int t_index = 4;
  for (const auto& p : sample_points(h.manifold.box, 6, 8)) {
    StructureEval s(h.manifold, p, 1);
    const RealTensor nx = covariant_derivative(s.frame(), s.xi_jets());  // (i, k) = (nabla_i xi)^k
    const double fk = 1.0 / std::cosh(p[t_index]);
    double res = 0.0;
    for (int i = 0; i < 5; ++i)
      for (int k = 0; k < 5; ++k) res = std::max(res, std::fabs(nx(i, k) + fk * s.phi2()(k, i)));
    EXPECT_LT(res, 1e-9);
  }
}

TEST(Geometry, LieDerivativeExamples) {
  // rotation on the flat plane is Killing
  {
    PointContext ctx(std::vector<std::string>{"x", "y"}, Point{0.3, -0.8}, 1);
    FrameEval f(ctx, {{constant(1.0), constant(0.0)}, {constant(0.0), constant(1.0)}});
    const LieDerivative L = lie_derivative_metric(f, ctx.vector({-variable("y"), variable("x")}));
    EXPECT_LT(max_abs(L.coordinate), 1e-15);
    EXPECT_LT(max_abs(L.covariant), 1e-15);
  }
  // x d/dx on the line: L g = 2 dx^2
  {
    PointContext ctx(std::vector<std::string>{"x"}, Point{1.7}, 1);
    FrameEval f(ctx, {{constant(1.0)}});
    const LieDerivative L = lie_derivative_metric(f, ctx.vector({variable("x")}));
    EXPECT_DOUBLE_EQ(L.coordinate(0, 0), 2.0);
  }
}

TEST(Geometry, LieFormulasAgreeOnRandomTriples) {
  double worst = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; count < 100; ++seed) {
    const ChartManifold m = random_structure(seed, 1);
    CoefficientStream cs(seed + 77);
    std::vector<Expr> field;
    for (int i = 0; i < 3; ++i) field.push_back(random_polynomial(cs, m.coords, 0.5));
    for (const auto& p : sample_points(m.box, 4, seed)) {
      PointContext ctx(m.coords, p, 1);
      FrameEval f(ctx, m.metric);
      const LieDerivative L = lie_derivative_metric(f, ctx.vector(field));
      worst = std::max(worst, L.discrepancy / std::max(1.0, max_abs(L.coordinate)));
      ++count;
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Geometry, RejectsAsymmetricAndSingularMetrics) {
  PointContext ctx(std::vector<std::string>{"x", "y"}, Point{1.0, 2.0}, 1);
  EXPECT_THROW(FrameEval(ctx, {{constant(1.0), variable("x")}, {constant(0.5), constant(1.0)}}), ChartError);
  EXPECT_THROW(FrameEval(ctx, {{constant(1.0), constant(1.0)}, {constant(1.0), constant(1.0)}}), SingularMetric);
  EXPECT_THROW(FrameEval(ctx, {{variable("x"), variable("y")}, {variable("y"), variable("y") * variable("y") / variable("x")}}),
               SingularMetric);
}

TEST(Geometry, SamplePointsAreDeterministicAndInsideBox) {
  const Box box{{0.5, 1.5}, {-2.0, -1.0}, {10.0, 10.5}};
  const auto a = sample_points(box, 32, 42), b = sample_points(box, 32, 42), c = sample_points(box, 32, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& p : a)
    for (std::size_t i = 0; i < box.size(); ++i) {
      EXPECT_GE(p[i], box[i].lo);
      EXPECT_LT(p[i], box[i].hi);
    }
}

TEST(Geometry, ChartValidation) {
  ChartManifold m = build_flat_f0(1);
  m.metric[0][0] = parse("q + 1");
  EXPECT_THROW(m.validate(), ChartError);
  m = build_flat_f0(1);
  m.box[0] = {1.0, 1.0};
  EXPECT_THROW(m.validate(), ChartError);
  m = build_flat_f0(1);
  m.xi.pop_back();
  EXPECT_THROW(m.validate(), ChartError);
}

TEST(Geometry, TensorComponentCount) {
  for (int d = 1; d <= 5; ++d)
    for (int r = 0; r <= 2; ++r)
      for (int s = 0; s <= 2; ++s) {
        std::vector<Slot> slots(static_cast<std::size_t>(r), Slot::Up);
        slots.insert(slots.end(), static_cast<std::size_t>(s), Slot::Down);
        EXPECT_EQ(RealTensor(d, slots).size(), static_cast<std::size_t>(std::pow(d, r + s)));
      }
}
