#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tractorlab/models.hpp"

using namespace tractorlab;
using models_detail::field;

namespace {

/// S(x + a x^{k+1}) - 1 near x0 on flat R^d, per unit a and unit x^k: the
/// linear response that the improvement coefficient has to cancel.
double response(int d, int k, double a, double x0) {
  Chart c = models_detail::cartesian_chart(d, 1.0);
  MetricField flat = MetricField::flat(c);
  auto s_at = [&](double alpha) {
    ScalarField x = ScalarField::coordinate(d, 0);
    Density s{1.0, flat, x + alpha * pow(x, k + 1.0)};
    Point p(static_cast<std::size_t>(d), 0.1);
    p[0] = x0;
    return s_curvature(s, p);
  };
  return (s_at(a) - s_at(-a)) / (2 * a) / std::pow(x0, k);
}

}  // namespace

TEST(Yamabe, CoefficientFormula) {
  EXPECT_DOUBLE_EQ(improvement_coefficient(4, 1), -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(improvement_coefficient(4, 1), -4.0 / (4.0 * 3.0));
  EXPECT_DOUBLE_EQ(improvement_coefficient(3, 2), -0.5);
  EXPECT_THROW(improvement_coefficient(3, 3), ObstructionOrder);
  EXPECT_THROW(improvement_coefficient(3, 0), BadParameters);
}

TEST(Yamabe, CoefficientMatchesLinearResponse) {
  for (int d = 3; d <= 6; ++d) {
    for (int k = 1; k < d; ++k) {
      const double x0 = 0.05;
      double r1 = response(d, k, 1e-3, x0), r2 = response(d, k, 5e-4, x0);
      // Halving alpha leaves the linear response unchanged.
      EXPECT_NEAR(r1, r2, 1e-6 * std::abs(r1));
      EXPECT_NEAR(-1.0 / r1, improvement_coefficient(d, k), 1e-6) << "d=" << d << " k=" << k;
    }
  }
}

TEST(Yamabe, NormalizeExactScale) {
  ModelBundle m = build_model("flat");
  DefiningDensity u = normalize(defining_density(m, "2x", "plane"));
  for (const Point& p : {Point{0.3, 0.1, 0.2}, Point{-0.5, 0.4, 0.9}}) {
    EXPECT_NEAR(u.sigma.value(p), p[0], 1e-15);
    EXPECT_NEAR(s_curvature(u.sigma, p), 1.0, 1e-14);
  }
  EXPECT_EQ(u.unit_order, 1);
}

TEST(Yamabe, NormalizeRejectsTimelikeScale) {
  ModelBundle m = build_model("round_sphere");
  DefiningDensity dd;
  dd.sigma = m.density("one");
  dd.feet = {Point{0.1, 0.2, 0.3}};
  EXPECT_THROW(normalize(dd), NonpositiveS);
}

TEST(Yamabe, FirstStepIsTheVerbatimFormula) {
  ModelBundle m = build_model("ellipsoid");
  DefiningDensity n = normalize(defining_density(m, "sigma", "ellipsoid"));
  ImproveOptions io;
  io.verify_input = false;
  DefiningDensity one = improve(n, 1, io);
  ScalarField verbatim = first_improvement_field(n.sigma);
  for (const Point& p : {Point{0.5, 0.2, 0.1}, Point{0.9, -0.3, 0.2}, Point{0.2, 0.7, -0.3}}) {
    EXPECT_NEAR(one.sigma.value(p), verbatim.value(p), 1e-12);
  }
}

TEST(Yamabe, StageOrdersOnEllipsoid) {
  ModelBundle m = build_model("ellipsoid");
  DefiningDensity dd = defining_density(m, "sigma", "ellipsoid", 2);
  DefiningDensity two = expand(dd, 2);
  double ord = residual_order(two.sigma, dd.feet[0], {}, 2);
  EXPECT_GE(ord, 1.9);
  EXPECT_LE(ord, 3.1);
  DefiningDensity three = expand(dd, 3);
  ASSERT_EQ(three.stage_orders.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_GE(three.stage_orders[i], static_cast<double>(i + 1) - 0.1);
  for (std::size_t i = 1; i < 3; ++i) EXPECT_GE(three.stage_orders[i] - three.stage_orders[i - 1], 0.9);
  EXPECT_EQ(three.unit_order, 3);
}

TEST(Yamabe, OrderChecks) {
  ModelBundle m = build_model("ellipsoid");
  DefiningDensity n = normalize(defining_density(m, "sigma", "ellipsoid", 2));
  EXPECT_THROW(improve(n, 2), OrderNotMet);
  EXPECT_THROW(improve(n, 3), ObstructionOrder);
  EXPECT_THROW(expand(n, 4), BadParameters);
}

TEST(Yamabe, FlatCoordinateIsAFixedPoint) {
  ModelBundle m = build_model("flat");
  DefiningDensity dd = defining_density(m, "x", "plane", 2);
  DefiningDensity u = expand(dd, 3);
  Point p = {0.2, 0.3, -0.1};
  EXPECT_NEAR(u.sigma.value(p), 0.2, 1e-15);
  for (double o : u.stage_orders) EXPECT_EQ(o, std::numeric_limits<double>::infinity());
  EXPECT_EQ(residual_order(u.sigma, dd.feet[0]), std::numeric_limits<double>::infinity());
  EXPECT_NEAR(obstruction(u, dd.feet[0]).value, 0.0, 1e-14);
}

TEST(Yamabe, CliffordDensityIsUnitToFourthOrder) {
  ModelBundle m = build_model("clifford_torus");
  DefiningDensity dd = defining_density(m, "sigma", "torus", 3);
  for (const auto& x : dd.feet) {
    EXPECT_GE(residual_order(dd.sigma, x), 3.9);
    EXPECT_LT(std::abs(obstruction(dd, x).value), 1e-5);
  }
}

TEST(Yamabe, ObstructionIndependentOfUnitChoice) {
  ModelBundle m = build_model("ellipsoid");
  DefiningDensity u = expand(defining_density(m, "sigma", "ellipsoid", 2), 3, ExpandOptions{{}, false});
  // sigma (1 + c sigma^d) is another unit density of the same order.
  DefiningDensity v = u;
  v.sigma.rep = u.sigma.rep * (1.0 + 0.7 * pow(u.sigma.rep, 3.0));
  for (const auto& x : u.feet) {
    double a = obstruction(u, x).value, b = obstruction(v, x).value;
    EXPECT_NEAR(a, b, 1e-6 * std::max(1.0, std::abs(a)));
  }
}

TEST(Yamabe, ObstructionTransformsWithWeightMinusD) {
  ModelBundle m = build_model("ellipsoid");
  const MetricField& g = m.ambient();
  ScalarField omega = field("exp(0.2*x - 0.1*y*z) + 0.3*z^2", g.chart());
  MetricField g2 = g.rescaled(omega);
  DefiningDensity dd = defining_density(m, "sigma", "ellipsoid", 2);
  DefiningDensity dd2 = dd;
  dd2.sigma = dd.sigma.in_metric(g2);
  ExpandOptions quiet{{}, false};
  DefiningDensity u = expand(dd, 3, quiet), u2 = expand(dd2, 3, quiet);
  for (const auto& x : dd.feet) {
    double b = obstruction(u, x).value;
    double b2 = obstruction(u2, x).value;
    EXPECT_NEAR(b2, std::pow(omega.value(x), -3.0) * b, 1e-4 * std::max(1.0, std::abs(b)));
  }
}

TEST(Yamabe, PlaneHasNoObstruction) {
  ModelBundle m = build_model("flat");
  DefiningDensity u = expand(defining_density(m, "2x", "plane", 3), 3);
  for (const auto& x : u.feet) EXPECT_NEAR(obstruction(u, x).value, 0.0, 1e-12);
}
