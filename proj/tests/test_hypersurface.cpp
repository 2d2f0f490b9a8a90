#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "tractorlab/models.hpp"

using namespace tractorlab;
using models_detail::field;

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<Point> kTorusParams = {{0.3, 1.2}, {2.0, 4.4}, {5.1, 0.7}};

/// Graph x4 = eps f(x1, x2, x3) in flat R^4.
Embedding graph4() {
  Chart pc({"u", "v", "w"});
  pc.ranges.assign(3, {-1.0, 1.0});
  Embedding e;
  e.name = "graph4";
  e.params = pc;
  e.ambient = MetricField::flat(models_detail::cartesian_chart(4, 2.0));
  e.map = {ScalarField::coordinate(3, 0), ScalarField::coordinate(3, 1), ScalarField::coordinate(3, 2),
           field("0.3*sin(u)*cos(v) + 0.2*w^2*u + 0.1*v*w", pc)};
  return e;
}

/// Schouten tensor of a hypersurface of flat space assembled from II alone
/// through the Gauss equation R_ijkl = II_ik II_jl - II_il II_jk.
Eigen::MatrixXd gauss_schouten(const FundamentalForms& ff) {
  const int n = static_cast<int>(ff.second.rows());
  const Eigen::MatrixXd& h = ff.second;
  const Eigen::MatrixXd& gi = ff.induced_inv;
  Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) ric(j, l) += gi(i, k) * (h(i, k) * h(j, l) - h(i, l) * h(j, k));
  const double sc = (gi * ric).trace();
  const double j = sc / (2.0 * (n - 1));
  return (ric - j * ff.induced) / (n - 2.0);
}

}  // namespace

TEST(Hypersurface, PlaneIsTotallyGeodesic) {
  ModelBundle m = build_model("flat");
  const Embedding& e = m.embedding("plane");
  Point u = {0.3, -0.4};
  FundamentalForms ff = fundamental_forms(e, u);
  EXPECT_EQ(ff.second.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(ff.mean_curvature, 0.0);
  Tractor n = normal_tractor(e, u);
  EXPECT_EQ(n.top, 0.0);
  EXPECT_NEAR(n.mid(0), 1.0, 1e-15);
  EXPECT_EQ(n.bottom, 0.0);
}

TEST(Hypersurface, RoundSphereIsUmbilic) {
  for (double R : {0.5, 1.0, 2.5}) {
    ModelBundle m = build_model("round_subsphere", {{"R", std::to_string(R)}});
    const Embedding& e = m.embedding("sphere");
    for (const Point& u : {Point{0.7, 1.0}, Point{2.1, 4.0}}) {
      FundamentalForms ff = fundamental_forms(e, u);
      EXPECT_NEAR(ff.mean_curvature, 1.0 / R, 1e-12);
      EXPECT_LT(ff.trace_free.cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, R));
      Tractor n = normal_tractor(e, u);
      EXPECT_NEAR(n.bottom, -1.0 / R, 1e-12);
      Eigen::VectorXd radial = Eigen::Map<const Eigen::VectorXd>(ff.x.data(), 3) / R;
      EXPECT_LT((n.mid - radial).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_NEAR(tractor_metric(n, n), 1.0, 1e-9);
    }
  }
}

TEST(Hypersurface, CliffordForms) {
  ModelBundle m = build_model("clifford_torus");
  const Embedding& e = m.embedding("torus");
  for (const auto& u : kTorusParams) {
    FundamentalForms ff = fundamental_forms(e, u);
    Eigen::Matrix2d half = 0.5 * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d two;
    two << 0.5, 0.0, 0.0, -0.5;
    EXPECT_LT((ff.induced - half).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((ff.second - two).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(ff.mean_curvature, 0.0, 1e-14);
    EXPECT_LT((ff.trace_free - ff.second).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(ff.trace_free_norm_sq(), 2.0, 1e-13);
    EXPECT_TRUE(ff.oriented_by_sigma);
  }
}

TEST(Hypersurface, TraceFreePartIsTraceFree) {
  ModelBundle m = build_model("ellipsoid");
  const Embedding& e = m.embedding("ellipsoid");
  for (const Point& u : {Point{0.4, 0.3}, Point{1.7, 2.9}, Point{2.5, 5.5}}) {
    FundamentalForms ff = fundamental_forms(e, u);
    EXPECT_NEAR((ff.induced_inv * ff.trace_free).trace(), 0.0, 1e-10);
    // The ellipsoid is not umbilic away from the poles.
    EXPECT_GT(ff.trace_free_norm_sq(), 1e-4);
  }
}

TEST(Hypersurface, FialkowVanishesOnUmbilicExamples) {
  ModelBundle eq = build_model("round_subsphere", {{"d", "4"}});
  const Embedding& e = eq.embedding("equator");
  ModelBundle flat = build_model("round_subsphere", {{"d", "4"}, {"R", "1.5"}});
  const Embedding& s = flat.embedding("sphere");
  for (const Point& u : {Point{0.5, 1.1, 2.0}, Point{2.2, 0.4, 5.0}}) {
    EXPECT_LT(fialkow(e, u).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(fialkow(s, u).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Hypersurface, FialkowMatchesGaussEquationAssembly) {
  Embedding e = graph4();
  for (const Point& u : {Point{0.1, 0.2, 0.3}, Point{-0.5, 0.7, 0.2}, Point{0.8, -0.6, -0.4}}) {
    FundamentalForms ff = fundamental_forms(e, u);
    Eigen::MatrixXd expect =
        -gauss_schouten(ff) + ff.mean_curvature * ff.trace_free + 0.5 * ff.mean_curvature * ff.mean_curvature * ff.induced;
    EXPECT_LT((fialkow(e, u) - expect).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_GT(expect.cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Hypersurface, Areas) {
  ModelBundle cl = build_model("clifford_torus");
  const Embedding& torus = cl.embedding("torus");
  EXPECT_NEAR(area(torus).value, 2 * kPi * kPi, 1e-6);
  auto tf = integrate(torus, [](const FundamentalForms& ff) { return ff.trace_free_norm_sq(); });
  EXPECT_NEAR(tf.value, 4 * kPi * kPi, 1e-6);
  ModelBundle sp = build_model("round_subsphere", {{"R", "1"}});
  EXPECT_NEAR(area(sp.embedding("sphere")).value, 4 * kPi, 1e-6);
}

TEST(Hypersurface, CliffordEnergies) {
  ModelBundle m = build_model("clifford_torus");
  Energies en = energies(m.embedding("torus"), EnergyRequest::automatic(m.embedding("torus")));
  ASSERT_TRUE(en.bending && en.q3);
  EXPECT_NEAR(*en.bending, kPi * kPi, 1e-4);
  EXPECT_NEAR(*en.q3, -kPi * kPi, 1e-4);
  EXPECT_FALSE(en.willmore_flat.has_value());

  const Embedding& st = m.embedding("stereographic");
  Energies fl = energies(st, EnergyRequest::automatic(st));
  ASSERT_TRUE(fl.willmore_flat && fl.gauss_bonnet);
  EXPECT_NEAR(*fl.willmore_flat, 2 * kPi * kPi, 1e-3);
  EXPECT_NEAR(*fl.gauss_bonnet, 0.0, 1e-4);
  EXPECT_NEAR(*fl.bending, kPi * kPi, 1e-4);
}

TEST(Hypersurface, WillmoreFlatIsHalfTraceFreeNorm) {
  ModelBundle m = build_model("ellipsoid");
  const Embedding& e = m.embedding("ellipsoid");
  Energies en = energies(e, EnergyRequest::automatic(e));
  auto half = integrate(e, [](const FundamentalForms& ff) { return 0.5 * ff.trace_free_norm_sq(); });
  ASSERT_TRUE(en.willmore_flat.has_value());
  EXPECT_NEAR(*en.willmore_flat, half.value, 1e-6);
  EXPECT_NEAR(*en.gauss_bonnet, 4 * kPi, 1e-4);
}

TEST(Hypersurface, UmbilicEnergies) {
  ModelBundle eq = build_model("round_subsphere");
  const Embedding& e = eq.embedding("equator");
  Energies en = energies(e, EnergyRequest::automatic(e));
  EXPECT_NEAR(*en.bending, 0.0, 1e-9);
  EXPECT_NEAR(*en.q3, 2 * kPi, 1e-4);
  ModelBundle s4 = build_model("round_subsphere", {{"d", "4"}, {"R", "1"}});
  EnergyRequest q4;
  q4.bending = false;
  q4.q4 = true;
  GridOptions small;
  small.initial = 6;
  EXPECT_NEAR(*energies(s4.embedding("sphere"), q4, small).q4, 0.0, 1e-9);
}

TEST(Hypersurface, BendingAndQ3AreConformallyInvariant) {
  ModelBundle m = build_model("ellipsoid");
  const Embedding& e = m.embedding("ellipsoid");
  MetricField g2 = m.ambient().rescaled(field("exp(0.3*x - 0.2*y*z) + 0.2*z^2", m.ambient().chart()));
  EnergyRequest req;
  req.q3 = true;
  Energies a = energies(e, req), b = energies(e.with_ambient(g2), req);
  EXPECT_NEAR(*a.bending, *b.bending, 1e-4);
  EXPECT_NEAR(*a.q3, *b.q3, 1e-4);
  EXPECT_GT(*a.bending, 0.1);
}

TEST(Hypersurface, Errors) {
  ModelBundle cl = build_model("clifford_torus");
  const Embedding& torus = cl.embedding("torus");
  const Embedding& stereo = cl.embedding("stereographic");
  Point u = {0.3, 1.2};
  EXPECT_THROW(fialkow(torus, u), DimensionTooLow);
  EnergyRequest q4;
  q4.q4 = true;
  EXPECT_THROW(energies(torus, q4), WrongDimension);
  EnergyRequest wf;
  wf.willmore_flat = true;
  EXPECT_THROW(energies(torus, wf), WrongDimension);
  Embedding no_chi = torus;
  no_chi.euler_characteristic.reset();
  EnergyRequest q3;
  q3.q3 = true;
  q3.euler_from_gauss_bonnet = false;
  EXPECT_THROW(energies(no_chi, q3), MissingEulerCharacteristic);
  q3.euler_from_gauss_bonnet = true;
  EXPECT_NEAR(*energies(no_chi, q3).q3, -kPi * kPi, 1e-4);
  FormOptions strict;
  strict.require_defining_density = true;
  EXPECT_THROW(fundamental_forms(stereo, u, strict), MissingDefiningDensity);
  EXPECT_NO_THROW(fundamental_forms(stereo, u));
  ModelBundle el = build_model("ellipsoid");
  GridOptions coarse;
  coarse.initial = 4;
  coarse.max_doublings = 1;
  coarse.tolerance = 1e-14;
  EXPECT_THROW(area(el.embedding("ellipsoid"), coarse), GridTooCoarse);
  Embedding flat_line = el.embedding("ellipsoid");
  flat_line.sigma.reset();
  flat_line.map = {ScalarField::coordinate(2, 0), ScalarField::coordinate(2, 0), ScalarField::constant(2, 0.0)};
  EXPECT_THROW(fundamental_forms(flat_line, u), DegenerateJacobian);
}

TEST(Hypersurface, UnitScaleTractorRestrictsToNormalTractor) {
  for (const char* name : {"ellipsoid", "clifford_torus"}) {
    ModelBundle m = build_model(name);
    std::string emb = std::string(name) == "ellipsoid" ? "ellipsoid" : "torus";
    std::string den = std::string(name) == "ellipsoid" ? "sigma" : "generic";
    DefiningDensity dd = defining_density(m, den, emb, 3);
    DefiningDensity unit = expand(dd, 2, ExpandOptions{{}, false});
    Embedding e = m.embedding(emb);
    e.sigma = unit.sigma;
    TractorField I = scale_tractor(unit.sigma);
    for (const auto& u : foot_parameters(e, 3)) {
      Point x = e.image(u);
      Tractor i = I.at(x), n = normal_tractor(e, u);
      EXPECT_LT((i - n).max_slot(), 1e-6) << name;
    }
  }
}

TEST(Hypersurface, TractorGradientRecoversTraceFreeForm) {
  ModelBundle m = build_model("clifford_torus");
  DefiningDensity unit = expand(defining_density(m, "generic", "torus", 2), 3, ExpandOptions{{}, false});
  Embedding e = m.embedding("torus");
  TractorField I = scale_tractor(unit.sigma);
  for (const auto& u : kTorusParams) {
    FundamentalForms ff = fundamental_forms(e, u);
    auto grad = tractor_derivative_all(I, ff.x);
    Eigen::MatrixXd mid(3, 3);
    for (int a = 0; a < 3; ++a) mid.row(a) = grad[static_cast<std::size_t>(a)].mid.transpose();
    Eigen::MatrixXd t = tangential(ff, mid);
    Eigen::MatrixXd tf = t - ((ff.induced_inv * t).trace() / 2.0) * ff.induced;
    EXPECT_LT((tf - ff.trace_free).cwiseAbs().maxCoeff(), 1e-6);
  }
}
