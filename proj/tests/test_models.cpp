#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "tractorlab/models.hpp"

using namespace tractorlab;
using models_detail::field;

namespace {

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) s.replace(at, from.size(), to);
  return s;
}

/// f(X1..X4) = X1^2 + X3 X2 + 0.5 + 0.2 X4 written against chart coordinates.
std::string chart_density(const std::vector<std::string>& xs) {
  std::string f = "A1^2 + A3*A2 + 0.5 + 0.2*A4";
  for (int i = 0; i < 4; ++i) f = replace_all(f, "A" + std::to_string(i + 1), "(" + xs[static_cast<std::size_t>(i)] + ")");
  return f;
}

}  // namespace

TEST(Models, BuildErrors) {
  EXPECT_THROW(build_model("torus_knot"), UnknownModel);
  EXPECT_THROW(build_model("round_sphere", {{"d", "1"}}), BadParameters);
  EXPECT_THROW(build_model("round_sphere", {{"chart", "mercator"}}), BadParameters);
  EXPECT_THROW(build_model("round_sphere", {{"chart", "polar"}, {"d", "4"}}), BadParameters);
  EXPECT_THROW(build_model("sphere_height", {{"k", "abc"}}), BadParameters);
  EXPECT_THROW(build_model("ellipsoid", {{"a", "-1"}}), BadParameters);
  EXPECT_THROW(build_model("flat", {{"colour", "blue"}}), BadParameters);
  EXPECT_THROW(build_model("graph_surface", {{"eps", "0"}}), BadParameters);
  EXPECT_THROW(build_model("graph_surface", {{"f", "cos(x"}}), BadParameters);
  EXPECT_THROW(build_model("round_subsphere", {{"R", "2"}, {"equator", "1"}}), BadParameters);
}

TEST(Models, KnownValuesCarryProvenance) {
  for (const auto& name : model_names()) {
    ModelBundle m = build_model(name);
    for (const auto& k : m.known) {
      EXPECT_TRUE(k.provenance == "literature" || k.provenance == "derived" || k.provenance == "elementary") << k.id;
      EXPECT_FALSE(k.description.empty()) << k.id;
    }
  }
  ModelBundle sh = build_model("sphere_height", {{"k", "2"}});
  bool found = false;
  for (const auto& k : sh.known) {
    if (k.quantity == "s_curvature") {
      EXPECT_DOUBLE_EQ(k.expected, -3.0);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Models, DefiningDensitiesVanishOnEmbeddings) {
  std::vector<std::pair<std::string, ModelArgs>> cases;
  for (const auto& name : model_names()) cases.emplace_back(name, ModelArgs{});
  cases.push_back({"round_subsphere", {{"d", "4"}}});
  cases.push_back({"round_subsphere", {{"R", "1.7"}}});
  cases.push_back({"graph_surface", {{"eps", "0.3"}}});
  int checked = 0;
  for (const auto& [name, args] : cases) {
    ModelBundle m = build_model(name, args);
    for (const auto& [ename, e] : m.embeddings) {
      if (!e.sigma) continue;
      for (const auto& x : foot_points(e, 6)) {
        EXPECT_NEAR(e.sigma->value(x), 0.0, 1e-10) << name << "/" << ename;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 30);
}

TEST(Models, AmbientFormulaMatchesCharts) {
  ModelBundle m = build_model("sphere_height", {{"k", "0.5"}});
  auto expr = parse(m.cone_densities.at("sigma"));
  for (const auto& p : sample_points(m.ambient().chart(), 5, 3)) {
    Point c = m.to_cone(p);
    EXPECT_NEAR(ambient_s(expr, m.cone_coords, c, m.cone_params), 0.75, 1e-8);
    EXPECT_NEAR(ambient_s(expr, m.cone_coords, c, m.cone_params), s_curvature(m.density("sigma"), p), 1e-8);
  }
  ModelBundle cl = build_model("clifford_torus");
  auto cexpr = parse(cl.cone_densities.at("sigma"));
  for (double tau : {-0.2, 0.05, 0.15}) {
    Point q = {tau, 0.7, 2.1};
    double chart = s_curvature(cl.density("sigma"), q);
    EXPECT_NEAR(ambient_s(cexpr, cl.cone_coords, cl.to_cone(q)), chart, 1e-8);
    EXPECT_LT(std::abs(chart - 1.0), 10 * std::pow(std::sin(tau), 4));
  }
}

TEST(Models, AmbientFormulaForNonlinearExtension) {
  // sigma~ = (x^2 + X y)/ctz + ctz/2 + Y/5 is homogeneous of degree one.
  std::vector<std::string> cone = {"x", "y", "X", "Y", "ctz"};
  Expr amb = parse("(x^2 + X*y)/ctz + 0.5*ctz + 0.2*Y");
  MetricField st = models_detail::stereographic_sphere(3);
  std::string r2 = "(x^2+y^2+z^2)";
  Density ds{1.0, st, field(chart_density({"2*x/(1+" + r2 + ")", "2*y/(1+" + r2 + ")", "2*z/(1+" + r2 + ")",
                                           "(" + r2 + "-1)/(" + r2 + "+1)"}),
                            st.chart())};
  MetricField po = models_detail::polar_sphere();
  Density dp{1.0, po, field(chart_density({"cos(pi/4-tau)*cos(theta)", "cos(pi/4-tau)*sin(theta)",
                                           "sin(pi/4-tau)*cos(Theta)", "sin(pi/4-tau)*sin(Theta)"}),
                            po.chart())};
  for (const auto& q : sample_points(po.chart(), 5, 11)) {
    Point c = models_detail::polar_to_cone(q);
    Point x = {c[0] / (1 - c[3]), c[1] / (1 - c[3]), c[2] / (1 - c[3])};
    double sp = s_curvature(dp, q), ss = s_curvature(ds, x);
    EXPECT_NEAR(sp, ss, 1e-8);
    EXPECT_NEAR(ambient_s(amb, cone, c), sp, 1e-8);
  }
}

TEST(Models, AmbientFormulaErrors) {
  std::vector<std::string> cone = {"x", "y", "X", "Y", "ctz"};
  Point on = {1.0, 0.0, 0.0, 0.0, 1.0};
  EXPECT_THROW(ambient_s(parse("x^2"), cone, on), NotHomogeneous);
  Point off = {0.5, 0.0, 0.0, 0.0, 1.0};
  EXPECT_THROW(ambient_s(parse("x"), cone, off), OffCone);
  Point short_point = {1.0, 1.0};
  std::vector<std::string> two = {"x", "ctz"};
  EXPECT_THROW(ambient_s(parse("x"), two, short_point), ShapeMismatch);
}

TEST(Models, ChartConsistency) {
  MetricField st = models_detail::stereographic_sphere(3);
  MetricField po = models_detail::polar_sphere();
  for (const auto& q : sample_points(po.chart(), 5, 5)) {
    Point c = models_detail::polar_to_cone(q);
    Point x = {c[0] / (1 - c[3]), c[1] / (1 - c[3]), c[2] / (1 - c[3])};
    Point back = models_detail::stereo_to_cone(x);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(back[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(i)], 1e-12);
    CurvatureBundle a = curvature(st, x), b = curvature(po, q);
    EXPECT_NEAR(a.scalar, b.scalar, 1e-8);
    EXPECT_NEAR(a.j, b.j, 1e-8);
  }
}

TEST(Models, SamplingIsDeterministic) {
  ModelBundle m = build_model("clifford_torus");
  auto a = sample_points(m.ambient().chart(), 8, 42), b = sample_points(m.ambient().chart(), 8, 42);
  EXPECT_EQ(a, b);
  auto c = sample_points(m.ambient().chart(), 8, 43);
  EXPECT_NE(a, c);
  for (const auto& p : a) EXPECT_TRUE(m.ambient().chart().contains(p));
}

TEST(Models, DefaultNamesAreResolvable) {
  ModelBundle cl = build_model("clifford_torus");
  EXPECT_NO_THROW(cl.density("generic"));
  EXPECT_THROW(cl.density("nope"), BadParameters);
  EXPECT_THROW(cl.embedding("nope"), BadParameters);
  EXPECT_THROW(cl.metric("nope"), BadParameters);
  EXPECT_EQ(cl.embedding("torus").euler_characteristic, 0);
}
