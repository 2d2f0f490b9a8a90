#pragma once

// Built-in geometries with reference values.

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tractorlab/conformal.hpp"
#include "tractorlab/expr.hpp"
#include "tractorlab/hypersurface.hpp"
#include "tractorlab/rng.hpp"
#include "tractorlab/yamabe.hpp"

namespace tractorlab {

enum class Comparison { equal, at_least };

struct KnownValue {
  std::string id;
  std::string quantity;  // what the engine computes, see checks.hpp
  std::string target;    // density, metric or embedding name
  double expected = 0.0;
  double tolerance = 0.0;
  std::string provenance;  // literature | derived | elementary
  std::string description;
  Comparison comparison = Comparison::equal;
  std::string auxiliary;  // second target where needed
};

using ModelArgs = std::map<std::string, std::string, std::less<>>;

struct ModelBundle {
  std::string name;
  ModelArgs args;
  std::map<std::string, MetricField> metrics;
  std::map<std::string, Density> densities;
  std::map<std::string, Embedding> embeddings;
  std::vector<KnownValue> known;
  /// Chart point -> point on the ctz = 1 section of the null cone, when defined.
  std::function<Point(std::span<const double>)> to_cone;
  std::vector<std::string> cone_coords;
  std::map<std::string, std::string> cone_densities;  // density name -> homogeneous expression
  Params cone_params;

  const MetricField& ambient() const { return metrics.at("ambient"); }

  const Density& density(const std::string& n) const {
    auto it = densities.find(n);
    if (it == densities.end()) throw BadParameters("model '" + name + "' has no density '" + n + "'");
    return it->second;
  }
  const Embedding& embedding(const std::string& n) const {
    auto it = embeddings.find(n);
    if (it == embeddings.end()) throw BadParameters("model '" + name + "' has no embedding '" + n + "'");
    return it->second;
  }
  const MetricField& metric(const std::string& n) const {
    auto it = metrics.find(n);
    if (it == metrics.end()) throw BadParameters("model '" + name + "' has no metric '" + n + "'");
    return it->second;
  }
};

// ------------------------------------------------------------------ sampling

/// Points drawn uniformly from the chart box, kept when the domain predicate
/// and `accept` hold. Deterministic for a seed.
inline std::vector<Point> sample_points(const Chart& chart, int count, std::uint64_t seed,
                                        const std::function<bool(const Point&)>& accept = {}) {
  Pcg32 rng(seed);
  std::vector<Point> out;
  int tries = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++tries > 1000 * (count + 1)) throw BadParameters("could not sample points inside the chart domain");
    Point p;
    for (const auto& r : chart.ranges) p.push_back(rng.uniform(r.first, r.second));
    if (!chart.contains(p)) continue;
    if (accept && !accept(p)) continue;
    out.push_back(std::move(p));
  }
  return out;
}

/// Deterministic low-discrepancy parameter points on an embedding.
inline std::vector<Point> foot_parameters(const Embedding& e, int count) {
  static constexpr double kAlpha[] = {0.6180339887498949, 0.4142135623730950, 0.7320508075688772,
                                      0.2360679774997897, 0.6457513110645906};
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point u;
    for (int i = 0; i < e.dim(); ++i) {
      const auto& r = e.params.ranges[static_cast<std::size_t>(i)];
      double f = std::fmod(0.5 + (k + 1) * kAlpha[i % 5], 1.0);
      if (!e.params.periods[static_cast<std::size_t>(i)]) f = 0.1 + 0.8 * f;
      u.push_back(r.first + f * (r.second - r.first));
    }
    out.push_back(std::move(u));
  }
  return out;
}

/// The same points mapped to the ambient chart.
inline std::vector<Point> foot_points(const Embedding& e, int count) {
  std::vector<Point> out;
  for (const auto& u : foot_parameters(e, count)) out.push_back(e.image(u));
  return out;
}

inline DefiningDensity defining_density(const ModelBundle& m, const std::string& density, const std::string& embedding,
                                        int feet = 4) {
  DefiningDensity dd;
  dd.sigma = m.density(density);
  dd.surface = m.embedding(embedding);
  dd.feet = foot_points(*dd.surface, feet);
  return dd;
}

// ------------------------------------------------------------------ helpers

namespace models_detail {

inline std::vector<std::string> cartesian_names(int d) {
  static const char* base[] = {"x", "y", "z", "w"};
  std::vector<std::string> n;
  for (int i = 0; i < d; ++i) n.push_back(d <= 4 ? std::string(base[i]) : "x" + std::to_string(i + 1));
  return n;
}

inline std::string sum_of_squares(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? "+" : "") + names[i] + "^2";
  return s;
}

inline ScalarField field(const std::string& text, const Chart& chart, const Params& params = {}) {
  return ScalarField::from_text(text, chart.coords, params);
}

class ArgReader {
 public:
  ArgReader(const std::string& model, const ModelArgs& args) : model_(model), args_(args) {}

  double number(const std::string& key, double fallback) {
    used_.push_back(key);
    auto it = args_.find(key);
    if (it == args_.end()) return fallback;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw BadParameters(model_ + ": parameter " + key + "='" + it->second + "' is not a number");
    }
  }

  int integer(const std::string& key, int fallback, int lo, int hi) {
    double v = number(key, fallback);
    if (v != std::floor(v) || v < lo || v > hi) {
      throw BadParameters(model_ + ": " + key + " must be an integer in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    return static_cast<int>(v);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    used_.push_back(key);
    auto it = args_.find(key);
    return it == args_.end() ? fallback : it->second;
  }

  bool has(const std::string& key) const { return args_.count(key) != 0; }

  void finish() const {
    for (const auto& [k, v] : args_) {
      bool ok = false;
      for (const auto& u : used_) ok = ok || u == k;
      if (!ok) throw BadParameters(model_ + ": unknown parameter '" + k + "'");
    }
  }

 private:
  std::string model_;
  const ModelArgs& args_;
  std::vector<std::string> used_;
};

inline KnownValue kv(std::string id, std::string quantity, std::string target, double expected, double tol,
                     std::string provenance, std::string description, Comparison c = Comparison::equal,
                     std::string aux = {}) {
  return KnownValue{std::move(id), std::move(quantity), std::move(target), expected, tol, std::move(provenance),
                    std::move(description), c, std::move(aux)};
}

inline Chart cartesian_chart(int d, double half_width) {
  Chart c(cartesian_names(d));
  c.ranges.assign(static_cast<std::size_t>(d), {-half_width, half_width});
  return c;
}

/// Round metric 4 delta / (1 + |x|^2)^2 in the stereographic chart.
inline MetricField stereographic_sphere(int d) {
  Chart c = cartesian_chart(d, 1.5);
  auto r2 = sum_of_squares(c.coords);
  auto conf = field("4/(1+" + r2 + ")^2", c);
  std::vector<ScalarField> diag(static_cast<std::size_t>(d), conf);
  return MetricField::diagonal(c, diag, Signature::riemannian, "round-stereographic");
}

inline ScalarField stereographic_height(const Chart& c) {
  auto r2 = sum_of_squares(c.coords);
  return field("(" + r2 + "-1)/(" + r2 + "+1)", c);
}

/// ds^2 = dtau^2 + (1/2)(dth^2 + dTh^2) + (1/2) sin(2 tau)(dth^2 - dTh^2).
inline MetricField polar_sphere() {
  Chart c({"tau", "theta", "Theta"});
  c.domain = parse("pi^2/16 - tau^2");
  c.ranges = {{-0.3, 0.3}, {0.0, 2 * std::numbers::pi}, {0.0, 2 * std::numbers::pi}};
  c.periods = {std::nullopt, 2 * std::numbers::pi, 2 * std::numbers::pi};
  auto one = ScalarField::constant(3, 1.0);
  auto gth = field("(1 + sin(2*tau))/2", c);
  auto gTh = field("(1 - sin(2*tau))/2", c);
  return MetricField::diagonal(c, {one, gth, gTh}, Signature::riemannian, "round-polar");
}

/// Height Y = sin(pi/4 - tau) sin(Theta) on the polar chart.
inline ScalarField polar_height(const Chart& c) { return field("sin(pi/4 - tau)*sin(Theta)", c); }

inline std::vector<std::string> cone_names(int d) {
  if (d == 3) return {"x", "y", "X", "Y", "ctz"};
  std::vector<std::string> n;
  for (int i = 1; i <= d + 1; ++i) n.push_back("x" + std::to_string(i));
  n.push_back("ctz");
  return n;
}

inline Point stereo_to_cone(std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  Point p;
  for (double v : x) p.push_back(2 * v / (1 + r2));
  p.push_back((r2 - 1) / (r2 + 1));
  p.push_back(1.0);
  return p;
}

inline Point polar_to_cone(std::span<const double> q) {
  const double r = std::cos(std::numbers::pi / 4 - q[0]);
  const double R = std::sin(std::numbers::pi / 4 - q[0]);
  return {r * std::cos(q[1]), r * std::sin(q[1]), R * std::cos(q[2]), R * std::sin(q[2]), 1.0};
}

/// S^{n} in R^{n+1} of radius R by hyperspherical angles; the last angle is periodic.
inline Embedding hypersphere(int n, double radius, const MetricField& ambient, std::vector<ScalarField> map_override = {}) {
  std::vector<std::string> names;
  if (n == 2) names = {"theta", "phi"};
  else if (n == 3) names = {"chi", "theta", "phi"};
  else throw BadParameters("hyperspheres are provided for dimensions 2 and 3");
  Chart pc(names);
  for (int i = 0; i < n - 1; ++i) pc.ranges[static_cast<std::size_t>(i)] = {0.0, std::numbers::pi};
  pc.ranges[static_cast<std::size_t>(n - 1)] = {0.0, 2 * std::numbers::pi};
  pc.periods[static_cast<std::size_t>(n - 1)] = 2 * std::numbers::pi;
  Params prm{{"R", radius}};
  std::vector<std::string> comps;
  if (n == 2) comps = {"R*sin(theta)*cos(phi)", "R*sin(theta)*sin(phi)", "R*cos(theta)"};
  else comps = {"R*sin(chi)*sin(theta)*cos(phi)", "R*sin(chi)*sin(theta)*sin(phi)", "R*sin(chi)*cos(theta)", "R*cos(chi)"};
  Embedding e;
  e.params = pc;
  e.ambient = ambient;
  if (map_override.empty()) {
    for (const auto& s : comps) e.map.push_back(field(s, pc, prm));
  } else {
    e.map = std::move(map_override);
  }
  e.euler_characteristic = n == 2 ? 2 : 0;
  return e;
}

}  // namespace models_detail

// ------------------------------------------------------------------ builders

inline ModelBundle build_flat(const ModelArgs& args, bool half_space) {
  using namespace models_detail;
  const std::string name = half_space ? "half_space" : "flat";
  ArgReader rd(name, args);
  const int d = rd.integer("d", 3, 2, 8);
  rd.finish();
  ModelBundle m;
  m.name = name;
  m.args = args;
  Chart c = cartesian_chart(d, 1.0);
  if (half_space) {
    c.domain = parse(c.coords[0]);
    c.ranges[0] = {0.1, 2.0};
  }
  MetricField flat = MetricField::flat(c);
  m.metrics.emplace("ambient", flat);
  Density x{1.0, flat, ScalarField::coordinate(d, 0)};
  m.densities.emplace("x", x);
  m.densities.emplace("2x", Density{1.0, flat, 2.0 * ScalarField::coordinate(d, 0)});
  m.known.push_back(kv(name + ".s.x", "s_curvature", "x", 1.0, 1e-12, "elementary", "S of the hyperbolic scale x"));
  if (half_space) {
    m.metrics.emplace("hyperbolic", flat.rescaled(1.0 / ScalarField::coordinate(d, 0)));
    m.known.push_back(kv(name + ".sc.hyperbolic", "scalar_curvature", "hyperbolic", -d * (d - 1.0), 1e-8,
                         "elementary", "scalar curvature of x^-2 times the flat metric"));
  } else if (d >= 2) {
    // Plane x = 0.
    std::vector<std::string> pn;
    for (int i = 1; i < d; ++i) pn.push_back("u" + std::to_string(i));
    Chart pc(pn);
    Embedding e;
    e.name = "plane";
    e.params = pc;
    e.ambient = flat;
    e.map.push_back(ScalarField::constant(d - 1, 0.0));
    for (int i = 0; i < d - 1; ++i) e.map.push_back(ScalarField::coordinate(d - 1, i));
    e.sigma = x;
    m.embeddings.emplace("plane", e);
    if (d >= 3) {
      m.known.push_back(kv(name + ".b.plane", "obstruction_max", "x", 0.0, 1e-10, "elementary",
                           "obstruction density of a plane", Comparison::equal, "plane"));
    }
  }
  return m;
}

inline ModelBundle build_round_sphere(const ModelArgs& args) {
  using namespace models_detail;
  ArgReader rd("round_sphere", args);
  const std::string chart = rd.text("chart", "stereographic");
  const int d = rd.integer("d", 3, 2, 8);
  rd.finish();
  if (chart != "stereographic" && chart != "polar") throw BadParameters("round_sphere: chart must be stereographic or polar");
  if (chart == "polar" && d != 3) throw BadParameters("round_sphere: the polar chart is three-dimensional");
  ModelBundle m;
  m.name = "round_sphere";
  m.args = args;
  MetricField g = chart == "polar" ? polar_sphere() : stereographic_sphere(d);
  m.metrics.emplace("ambient", g);
  ScalarField h = chart == "polar" ? polar_height(g.chart()) : stereographic_height(g.chart());
  m.densities.emplace("one", Density{1.0, g, ScalarField::constant(d, 1.0)});
  m.densities.emplace("height", Density{1.0, g, h});
  m.to_cone = chart == "polar" ? std::function<Point(std::span<const double>)>(polar_to_cone)
                               : std::function<Point(std::span<const double>)>(stereo_to_cone);
  m.cone_coords = cone_names(d);
  m.cone_densities["one"] = "ctz";
  m.cone_densities["height"] = m.cone_coords[static_cast<std::size_t>(d)];
  m.known.push_back(kv("round_sphere.sc", "scalar_curvature", "ambient", d * (d - 1.0), 1e-8, "elementary",
                       "scalar curvature of the unit sphere"));
  if (d >= 3) {
    m.known.push_back(kv("round_sphere.j", "schouten_trace", "ambient", d / 2.0, 1e-8, "elementary", "J = d/2"));
  }
  m.known.push_back(kv("round_sphere.s.one", "s_curvature", "one", -1.0, 1e-10, "literature",
                       "timelike scale tractor, I^2 = -1"));
  m.known.push_back(kv("round_sphere.s.height", "s_curvature", "height", 1.0, 1e-10, "literature",
                       "S of the height function"));
  return m;
}

inline ModelBundle build_sphere_height(const ModelArgs& args) {
  using namespace models_detail;
  ArgReader rd("sphere_height", args);
  const double k = rd.number("k", 0.5);
  const int d = rd.integer("d", 3, 2, 8);
  const std::string chart = rd.text("chart", "stereographic");
  rd.finish();
  if (!std::isfinite(k)) throw BadParameters("sphere_height: k must be finite");
  if (chart != "stereographic" && chart != "polar") throw BadParameters("sphere_height: chart must be stereographic or polar");
  if (chart == "polar" && d != 3) throw BadParameters("sphere_height: the polar chart is three-dimensional");
  ModelBundle m;
  m.name = "sphere_height";
  m.args = args;
  MetricField g = chart == "polar" ? polar_sphere() : stereographic_sphere(d);
  m.metrics.emplace("ambient", g);
  ScalarField h = chart == "polar" ? polar_height(g.chart()) : stereographic_height(g.chart());
  ScalarField s = h - k;
  m.densities.emplace("sigma", Density{1.0, g, s});
  m.metrics.emplace("scale", g.rescaled(s.map([](const Jet& j) { return reciprocal(j.value() < 0 ? -j : j); })));
  m.to_cone = chart == "polar" ? std::function<Point(std::span<const double>)>(polar_to_cone)
                               : std::function<Point(std::span<const double>)>(stereo_to_cone);
  m.cone_coords = cone_names(d);
  m.cone_densities["sigma"] = m.cone_coords[static_cast<std::size_t>(d)] + " - k*ctz";
  m.cone_params["k"] = k;
  m.known.push_back(kv("sphere_height.s", "s_curvature", "sigma", 1 - k * k, 1e-8, "literature", "S(g, h - k) = 1 - k^2"));
  m.known.push_back(kv("sphere_height.sc", "scalar_curvature", "scale", d * (d - 1.0) * (k * k - 1), 1e-6,
                       "literature", "scalar curvature of g / (h - k)^2"));
  if (k == 1.0) {
    m.known.push_back(kv("sphere_height.flat", "riemann_max", "scale", 0.0, 1e-8, "literature",
                         "g / (h - 1)^2 is flat"));
  }
  return m;
}

inline ModelBundle build_clifford_torus(const ModelArgs& args) {
  using namespace models_detail;
  ArgReader rd("clifford_torus", args);
  rd.finish();
  ModelBundle m;
  m.name = "clifford_torus";
  m.args = args;
  MetricField g = polar_sphere();
  const Chart& c = g.chart();
  m.metrics.emplace("ambient", g);
  Density sigma{1.0, g, field("sin(tau)*(1 - (2/3)*sin(tau)^2)", c)};
  Density seed{1.0, g, field("sin(tau)", c)};
  m.densities.emplace("sigma", sigma);
  m.densities.emplace("seed", seed);
  // sin(tau) is already unit to fourth order; this seed is not.
  m.densities.emplace("generic", Density{1.0, g, field("sin(tau)*(1 + 0.5*sin(tau)*cos(theta))", c)});

  Chart pc({"theta", "Theta"});
  pc.ranges = {{0.0, 2 * std::numbers::pi}, {0.0, 2 * std::numbers::pi}};
  pc.periods = {2 * std::numbers::pi, 2 * std::numbers::pi};
  Embedding torus;
  torus.name = "torus";
  torus.params = pc;
  torus.ambient = g;
  torus.map = {ScalarField::constant(2, 0.0), ScalarField::coordinate(2, 0), ScalarField::coordinate(2, 1)};
  torus.sigma = sigma;
  torus.euler_characteristic = 0;
  m.embeddings.emplace("torus", torus);

  Chart flat_chart = cartesian_chart(3, 3.0);
  MetricField flat = MetricField::flat(flat_chart);
  m.metrics.emplace("flat", flat);
  Embedding stereo;
  stereo.name = "stereographic";
  stereo.params = pc;
  stereo.ambient = flat;
  const std::string den = "(sqrt(2) - sin(Theta))";
  stereo.map = {field("cos(theta)/" + den, pc), field("sin(theta)/" + den, pc), field("cos(Theta)/" + den, pc)};
  stereo.euler_characteristic = 0;
  m.embeddings.emplace("stereographic", stereo);

  m.to_cone = polar_to_cone;
  m.cone_coords = cone_names(3);
  m.cone_densities["sigma"] =
      "((sqrt(x^2+y^2) - sqrt(X^2+Y^2))/sqrt(2))*(1 - (2/3)*((sqrt(x^2+y^2) - sqrt(X^2+Y^2))/(sqrt(2)*ctz))^2)";
  m.cone_densities["seed"] = "(sqrt(x^2+y^2) - sqrt(X^2+Y^2))/sqrt(2)";

  const double pi2 = std::numbers::pi * std::numbers::pi;
  m.known.push_back(kv("clifford.area", "area", "torus", 2 * pi2, 1e-6, "derived", "area of the Clifford torus"));
  m.known.push_back(kv("clifford.bending", "bending", "torus", pi2, 1e-4, "derived", "bending energy"));
  m.known.push_back(kv("clifford.q3", "q3", "torus", -pi2, 1e-4, "derived", "q3 = pi chi - bending"));
  m.known.push_back(kv("clifford.order", "residual_order", "sigma", 3.9, 0.0, "literature",
                       "S = 1 + sigma^4 T", Comparison::at_least, "torus"));
  m.known.push_back(kv("clifford.b", "obstruction_max", "sigma", 0.0, 1e-5, "literature",
                       "Clifford torus is Willmore", Comparison::equal, "torus"));
  m.known.push_back(kv("clifford.willmore_flat", "willmore_flat", "stereographic", 2 * pi2, 1e-3, "derived",
                       "Willmore energy of the stereographic image"));
  m.known.push_back(kv("clifford.gauss_bonnet", "gauss_bonnet", "stereographic", 0.0, 1e-4, "derived",
                       "Gauss-Bonnet on a torus"));
  return m;
}

inline ModelBundle build_graph_surface(const ModelArgs& args) {
  using namespace models_detail;
  ArgReader rd("graph_surface", args);
  const double eps = rd.number("eps", 0.01);
  const std::string ftext = rd.text("f", "cos(x)*cos(y)");
  rd.finish();
  if (!std::isfinite(eps) || eps == 0.0) throw BadParameters("graph_surface: eps must be finite and nonzero");
  ModelBundle m;
  m.name = "graph_surface";
  m.args = args;
  Chart c({"x", "y", "z"});
  c.ranges = {{0.0, 2 * std::numbers::pi}, {0.0, 2 * std::numbers::pi}, {-0.5, 0.5}};
  MetricField flat = MetricField::flat(c);
  m.metrics.emplace("ambient", flat);
  Expr f;
  try {
    f = parse(ftext);
  } catch (const Error& e) {
    throw BadParameters(std::string("graph_surface: f: ") + e.what());
  }
  Params prm{{"eps", eps}};
  ScalarField fz = ScalarField::from_expr(f, std::vector<std::string>{"x", "y", "z"}, prm);
  Density sigma{1.0, flat, eps * fz - ScalarField::coordinate(3, 2)};
  m.densities.emplace("sigma", sigma);
  Chart pc({"x", "y"});
  pc.ranges = {{0.0, 2 * std::numbers::pi}, {0.0, 2 * std::numbers::pi}};
  if (ftext == "cos(x)*cos(y)") pc.periods = {2 * std::numbers::pi, 2 * std::numbers::pi};
  Embedding e;
  e.name = "graph";
  e.params = pc;
  e.ambient = flat;
  ScalarField f2 = ScalarField::from_expr(f, std::vector<std::string>{"x", "y"}, prm);
  e.map = {ScalarField::coordinate(2, 0), ScalarField::coordinate(2, 1), eps * f2};
  e.sigma = sigma;
  m.embeddings.emplace("graph", e);
  return m;
}

inline ModelBundle build_round_subsphere(const ModelArgs& args) {
  using namespace models_detail;
  ArgReader rd("round_subsphere", args);
  const int d = rd.integer("d", 3, 3, 4);
  const bool has_r = rd.has("R");
  const double R = rd.number("R", 1.0);
  const std::string equator = rd.text("equator", has_r ? "0" : "1");
  rd.finish();
  if (equator != "0" && equator != "1") throw BadParameters("round_subsphere: equator must be 0 or 1");
  if (has_r && equator == "1") throw BadParameters("round_subsphere: give either R or equator");
  if (!(R > 0.0)) throw BadParameters("round_subsphere: R must be positive");
  ModelBundle m;
  m.name = "round_subsphere";
  m.args = args;
  if (equator == "1") {
    MetricField g = stereographic_sphere(d);
    m.metrics.emplace("ambient", g);
    Density sigma{1.0, g, stereographic_height(g.chart())};
    m.densities.emplace("sigma", sigma);
    Embedding e = hypersphere(d - 1, 1.0, g);
    e.name = "equator";
    e.sigma = sigma;
    m.embeddings.emplace("equator", e);
    m.known.push_back(kv("equator.bending", "bending", "equator", 0.0, 1e-9, "elementary", "totally geodesic"));
    if (d == 3) {
      m.known.push_back(kv("equator.q3", "q3", "equator", 2 * std::numbers::pi, 1e-4, "elementary", "q3 = 2 pi"));
    } else {
      m.known.push_back(kv("equator.fialkow", "fialkow_max", "equator", 0.0, 1e-8, "elementary",
                           "Fialkow tensor of the equator"));
      m.known.push_back(kv("equator.q4", "q4", "equator", 0.0, 1e-9, "elementary", "umbilic q4"));
    }
  } else {
    Chart c = cartesian_chart(d, 2.0 * R);
    MetricField flat = MetricField::flat(c);
    m.metrics.emplace("ambient", flat);
    Params prm{{"R", R}};
    Density sigma{1.0, flat, field("(" + sum_of_squares(c.coords) + " - R^2)/(2*R)", c, prm)};
    m.densities.emplace("sigma", sigma);
    Embedding e = hypersphere(d - 1, R, flat);
    e.name = "sphere";
    e.sigma = sigma;
    m.embeddings.emplace("sphere", e);
    m.known.push_back(kv("sphere.h", "mean_curvature", "sphere", 1.0 / R, 1e-10, "derived", "H = 1/R"));
    m.known.push_back(kv("sphere.bending", "bending", "sphere", 0.0, 1e-9, "elementary", "umbilic"));
    if (d == 3) {
      m.known.push_back(kv("sphere.area", "area", "sphere", 4 * std::numbers::pi * R * R, 1e-6, "elementary", "area"));
      m.known.push_back(kv("sphere.gauss_bonnet", "gauss_bonnet", "sphere", 4 * std::numbers::pi, 1e-4, "elementary",
                           "Gauss-Bonnet on a sphere"));
    } else {
      m.known.push_back(kv("sphere.fialkow", "fialkow_max", "sphere", 0.0, 1e-8, "derived", "F = 0 for round spheres"));
      m.known.push_back(kv("sphere.q4", "q4", "sphere", 0.0, 1e-9, "elementary", "umbilic q4"));
    }
  }
  return m;
}

inline ModelBundle build_ellipsoid(const ModelArgs& args) {
  using namespace models_detail;
  ArgReader rd("ellipsoid", args);
  const double a = rd.number("a", 1.0), b = rd.number("b", 0.8), c = rd.number("c", 0.6);
  rd.finish();
  if (!(a > 0 && b > 0 && c > 0)) throw BadParameters("ellipsoid: semi-axes must be positive");
  ModelBundle m;
  m.name = "ellipsoid";
  m.args = args;
  Chart ch = cartesian_chart(3, 1.2 * std::max({a, b, c}));
  MetricField flat = MetricField::flat(ch);
  m.metrics.emplace("ambient", flat);
  Params prm{{"a", a}, {"b", b}, {"c", c}};
  const double s = std::cbrt(a * b * c);
  prm["s"] = s;
  Density sigma{1.0, flat, field("s*(1 - x^2/a^2 - y^2/b^2 - z^2/c^2)/2", ch, prm)};
  m.densities.emplace("sigma", sigma);
  Chart pc({"theta", "phi"});
  pc.ranges = {{0.0, std::numbers::pi}, {0.0, 2 * std::numbers::pi}};
  pc.periods = {std::nullopt, 2 * std::numbers::pi};
  Embedding e;
  e.name = "ellipsoid";
  e.params = pc;
  e.ambient = flat;
  e.map = {field("a*sin(theta)*cos(phi)", pc, prm), field("b*sin(theta)*sin(phi)", pc, prm),
           field("c*cos(theta)", pc, prm)};
  e.sigma = sigma;
  e.euler_characteristic = 2;
  m.embeddings.emplace("ellipsoid", e);
  m.known.push_back(kv("ellipsoid.gauss_bonnet", "gauss_bonnet", "ellipsoid", 4 * std::numbers::pi, 1e-4,
                       "elementary", "Gauss-Bonnet on an ellipsoid"));
  m.known.push_back(kv("ellipsoid.order3", "expanded_order", "sigma", 2.9, 0.0, "derived",
                       "residual order after expanding to order 3", Comparison::at_least, "ellipsoid"));
  return m;
}

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"flat",       "half_space",     "round_sphere",    "sphere_height",
                                                 "clifford_torus", "graph_surface", "round_subsphere", "ellipsoid"};
  return names;
}

inline ModelBundle build_model(const std::string& name, const ModelArgs& args = {}) {
  if (name == "flat") return build_flat(args, false);
  if (name == "half_space") return build_flat(args, true);
  if (name == "round_sphere") return build_round_sphere(args);
  if (name == "sphere_height") return build_sphere_height(args);
  if (name == "clifford_torus") return build_clifford_torus(args);
  if (name == "graph_surface") return build_graph_surface(args);
  if (name == "round_subsphere") return build_round_subsphere(args);
  if (name == "ellipsoid") return build_ellipsoid(args);
  throw UnknownModel("no built-in model named '" + name + "'");
}

// ------------------------------------------------------------ ambient formula

/// |d s|^2 - (2/d) s Box s for s homogeneous of degree 1 on flat Minkowski
/// space with coordinates (x_1..x_{d+1}, ctz), at a point of the ctz = 1
/// section of the null cone.
inline double ambient_s(const Expr& sigma, std::span<const std::string> coords, std::span<const double> point,
                        const Params& params = {}) {
  const int n = static_cast<int>(coords.size());
  if (n < 4 || static_cast<int>(point.size()) != n) throw ShapeMismatch("ambient point needs d+2 >= 4 coordinates");
  const int d = n - 2;
  double spatial = 0.0;
  for (int i = 0; i < n - 1; ++i) spatial += point[static_cast<std::size_t>(i)] * point[static_cast<std::size_t>(i)];
  const double t = point[static_cast<std::size_t>(n - 1)];
  if (std::abs(t - 1.0) > 1e-12 || std::abs(spatial - t * t) > 1e-9) throw OffCone("point is not on the ctz = 1 cone section");
  CompiledExpr c(sigma, coords, params);
  const double v = c(point);
  for (double lam : {2.0, 0.5}) {
    Point q(point.begin(), point.end());
    for (double& x : q) x *= lam;
    const double vl = c(q);
    if (std::abs(vl - lam * v) > 1e-9 * std::max(1.0, std::abs(lam * v))) {
      throw NotHomogeneous("expression is not homogeneous of degree 1 at the point");
    }
  }
  Jet j = c(seed_point(point, 2));
  double grad = 0.0, box = 0.0;
  for (int i = 0; i < n; ++i) {
    const double sign = i == n - 1 ? -1.0 : 1.0;
    Jet di = j.derivative(i);
    grad += sign * di.value() * di.value();
    box += sign * di.derivative(i).value();
  }
  return grad - (2.0 / d) * v * box;
}

}  // namespace tractorlab
