#pragma once

// Parametrized hypersurfaces: induced metric, unit conormal, second
// fundamental form II_ij = -n_b (d_i d_j F^b + Gamma^b_cd E^c_i E^d_j),
// H = tr II / (d-1), Fialkow tensor, quadrature and energy functionals.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tractorlab/conformal.hpp"
#include "tractorlab/parallel.hpp"
#include "tractorlab/riemann.hpp"
#include "tractorlab/tractor.hpp"

namespace tractorlab {

struct Embedding {
  std::string name;
  Chart params;                      // dimension d-1
  MetricField ambient;               // dimension d
  std::vector<ScalarField> map;      // d functions of the parameters
  std::optional<Density> sigma;      // defining density, conormal points to sigma > 0
  std::optional<int> euler_characteristic;

  int ambient_dim() const { return ambient.dim(); }
  int dim() const { return params.dim(); }

  Point image(std::span<const double> u) const {
    Point x;
    for (const auto& f : map) x.push_back(f.value(u));
    return x;
  }

  /// Same surface inside a rescaled ambient metric.
  Embedding with_ambient(const MetricField& m) const {
    Embedding e = *this;
    e.ambient = m;
    if (sigma) e.sigma = sigma->metric.same_as(m) ? *sigma : sigma->in_metric(m);
    return e;
  }
};

inline void validate_embedding(const Embedding& e) {
  if (static_cast<int>(e.map.size()) != e.ambient_dim()) throw ShapeMismatch("embedding map needs one function per ambient coordinate");
  if (e.dim() != e.ambient_dim() - 1) throw ShapeMismatch("parameter chart must have dimension d-1");
  for (const auto& f : e.map) {
    if (f.dim() != e.dim()) throw ShapeMismatch("embedding component on the wrong parameter chart");
  }
}

/// d/du_i of a field, as a field.
inline ScalarField partial_field(const ScalarField& f, int i) {
  return ScalarField::local(f.dim(), [f, i](std::span<const double> p, int order) {
    return f.at(p, order + 1).derivative(i);
  });
}

/// Pullback metric on the parameter chart.
inline MetricField induced_metric(const Embedding& e) {
  validate_embedding(e);
  const int d = e.ambient_dim();
  const int n = e.dim();
  std::vector<std::vector<ScalarField>> dF(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < d; ++b) dF[static_cast<std::size_t>(i)].push_back(partial_field(e.map[static_cast<std::size_t>(b)], i));
  }
  std::vector<ScalarField> gpull;
  for (int b = 0; b < d; ++b) {
    for (int c = 0; c < d; ++c) gpull.push_back(e.ambient.component(b, c).pullback(e.map));
  }
  std::vector<ScalarField> comps(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      auto gi = dF[static_cast<std::size_t>(i)];
      auto gj = dF[static_cast<std::size_t>(j)];
      ScalarField c(n, [gpull, gi, gj, d](std::span<const Jet> x) {
        std::vector<Jet> a, b;
        for (int k = 0; k < d; ++k) {
          a.push_back(gi[static_cast<std::size_t>(k)](x));
          b.push_back(gj[static_cast<std::size_t>(k)](x));
        }
        Jet r(x[0].nvars(), x[0].order());
        for (int p = 0; p < d; ++p) {
          for (int q = 0; q < d; ++q) r += gpull[static_cast<std::size_t>(p * d + q)](x) * a[static_cast<std::size_t>(p)] * b[static_cast<std::size_t>(q)];
        }
        return r;
      });
      comps[static_cast<std::size_t>(i * n + j)] = c;
      comps[static_cast<std::size_t>(j * n + i)] = c;
    }
  }
  return MetricField(e.params, std::move(comps), Signature::riemannian, e.name + "-induced");
}

/// Jets of the induced metric at a parameter point, curvature to `order`.
inline LocalGeometry induced_geometry(const Embedding& e, std::span<const double> u, int order,
                                      GeometryLevel level = GeometryLevel::ricci) {
  validate_embedding(e);
  const int d = e.ambient_dim();
  const int n = e.dim();
  auto seeds = seed_point(u, order + 3);
  std::vector<Jet> F, Ft;
  for (const auto& f : e.map) {
    F.push_back(f(seeds));
    Ft.push_back(F.back().truncated(order + 2));
  }
  std::vector<Jet> gb(static_cast<std::size_t>(d * d));
  for (int b = 0; b < d; ++b) {
    for (int c = b; c < d; ++c) {
      gb[static_cast<std::size_t>(b * d + c)] = e.ambient.component(b, c)(Ft);
      gb[static_cast<std::size_t>(c * d + b)] = gb[static_cast<std::size_t>(b * d + c)];
    }
  }
  std::vector<std::vector<Jet>> dF(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < d; ++b) dF[static_cast<std::size_t>(i)].push_back(F[static_cast<std::size_t>(b)].derivative(i));
  }
  std::vector<Jet> g(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      Jet r(n, order + 2);
      for (int b = 0; b < d; ++b) {
        Jet t(n, order + 2);
        for (int c = 0; c < d; ++c) t += gb[static_cast<std::size_t>(b * d + c)] * dF[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
        r += dF[static_cast<std::size_t>(i)][static_cast<std::size_t>(b)] * t;
      }
      g[static_cast<std::size_t>(i * n + j)] = r;
      g[static_cast<std::size_t>(j * n + i)] = r;
    }
  }
  return local_geometry_from_jets(std::move(g), n, u, order, level);
}

struct FundamentalForms {
  Point param;
  Point x;
  Eigen::MatrixXd jacobian;      // d x (d-1), E^b_i
  Eigen::MatrixXd induced;       // (d-1) x (d-1)
  Eigen::MatrixXd induced_inv;
  Eigen::VectorXd conormal;      // unit covector n_b
  Eigen::VectorXd normal;        // g^{-1} n
  Eigen::MatrixXd second;        // II_ij
  Eigen::MatrixXd trace_free;    // II - H g
  double mean_curvature = 0.0;
  bool oriented_by_sigma = false;

  double trace_free_norm_sq() const {
    Eigen::MatrixXd a = induced_inv * trace_free;
    return (a * a).trace();
  }
};

struct FormOptions {
  bool require_defining_density = false;
};

inline FundamentalForms fundamental_forms(const Embedding& e, std::span<const double> u, const FormOptions& opt = {}) {
  validate_embedding(e);
  const int d = e.ambient_dim();
  const int n = e.dim();
  FundamentalForms ff;
  ff.param.assign(u.begin(), u.end());
  std::vector<Jet> F;
  for (const auto& f : e.map) F.push_back(f.at(u, 2));
  for (const auto& f : F) ff.x.push_back(f.value());
  ff.jacobian.resize(d, n);
  for (int b = 0; b < d; ++b) {
    for (int i = 0; i < n; ++i) ff.jacobian(b, i) = F[static_cast<std::size_t>(b)].derivative(i).value();
  }
  LocalGeometry lg = local_geometry(e.ambient, ff.x, 0, GeometryLevel::christoffel);
  Eigen::MatrixXd g = to_matrix(lg.g, d);
  Eigen::MatrixXd ginv = to_matrix(lg.ginv, d);
  ff.induced = ff.jacobian.transpose() * g * ff.jacobian;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ff.induced, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(hi, 1e-300))) {
      throw DegenerateJacobian("embedding Jacobian is rank deficient at the parameter point");
    }
  }
  ff.induced_inv = ff.induced.inverse();

  Eigen::VectorXd nvec(d);
  if (e.sigma) {
    Jet s = e.sigma->rep.at(ff.x, 1);
    for (int b = 0; b < d; ++b) nvec(b) = s.derivative(b).value();
    ff.oriented_by_sigma = true;
  } else {
    if (opt.require_defining_density) throw MissingDefiningDensity("conormal orientation needs a defining density");
    // n_a = det[e_a, E_1, ..., E_{d-1}]
    for (int a = 0; a < d; ++a) {
      Eigen::MatrixXd m(d, d);
      m.col(0).setZero();
      m(a, 0) = 1.0;
      m.rightCols(n) = ff.jacobian;
      nvec(a) = m.determinant();
    }
  }
  const double len2 = nvec.dot(ginv * nvec);
  const double tangential = (ff.jacobian.transpose() * nvec).cwiseAbs().maxCoeff();
  if (!(len2 > 1e-24) || tangential > 1e-6 * std::sqrt(len2) * std::max(1.0, ff.jacobian.cwiseAbs().maxCoeff())) {
    throw DegenerateNormal("conormal is degenerate or not normal to the surface");
  }
  ff.conormal = nvec / std::sqrt(len2);
  ff.normal = ginv * ff.conormal;

  ff.second.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v = 0.0;
      for (int b = 0; b < d; ++b) {
        double acc = F[static_cast<std::size_t>(b)].derivative(i).derivative(j).value();
        for (int c = 0; c < d; ++c) {
          for (int k = 0; k < d; ++k) acc += lg.gamma[lg.i3(b, c, k)].value() * ff.jacobian(c, i) * ff.jacobian(k, j);
        }
        v -= ff.conormal(b) * acc;
      }
      ff.second(i, j) = ff.second(j, i) = v;
    }
  }
  ff.mean_curvature = (ff.induced_inv * ff.second).trace() / n;
  ff.trace_free = ff.second - ff.mean_curvature * ff.induced;
  return ff;
}

/// N = (0, n, -H) in the ambient scale at the image point.
inline Tractor normal_tractor(const Embedding& e, std::span<const double> u) {
  FundamentalForms ff = fundamental_forms(e, u);
  return make_tractor(e.ambient, ff.x, 0.0, 0.0, ff.conormal, -ff.mean_curvature);
}

/// Tangential projection E^T A E of an ambient 2-tensor.
inline Eigen::MatrixXd tangential(const FundamentalForms& ff, const Eigen::MatrixXd& a) {
  return ff.jacobian.transpose() * a * ff.jacobian;
}

/// F = P^T - P^Sigma + H II0 + H^2 g_Sigma / 2; ambient dimension >= 4.
inline Eigen::MatrixXd fialkow(const Embedding& e, std::span<const double> u) {
  if (e.ambient_dim() < 4) throw DimensionTooLow("the Fialkow tensor needs ambient dimension >= 4");
  FundamentalForms ff = fundamental_forms(e, u);
  CurvatureBundle amb = curvature(e.ambient, ff.x);
  LocalGeometry intr = induced_geometry(e, u, 0);
  return tangential(ff, amb.schouten) - to_matrix(intr.p, e.dim()) + ff.mean_curvature * ff.trace_free +
         0.5 * ff.mean_curvature * ff.mean_curvature * ff.induced;
}

// ---------------------------------------------------------------- quadrature

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes on [a, b] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  QuadratureRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[static_cast<std::size_t>(i)] = 0.5 * (b - a) * x + 0.5 * (a + b);
    r.weights[static_cast<std::size_t>(i)] = 0.5 * (b - a) * w;
  }
  return r;
}

inline QuadratureRule trapezoid_periodic(int n, double a, double period) {
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(a + period * i / n);
    r.weights.push_back(period / n);
  }
  return r;
}

struct GridOptions {
  int initial = 0;  // 0: 64 for surfaces, 16 for 3-dimensional parameter domains
  int max_doublings = 3;
  double tolerance = 1e-6;
};

struct QuadratureResult {
  double value = 0.0;
  int grid = 0;
  double change = 0.0;
};

/// Integrand receives the fundamental forms at a parameter point.
using SurfaceIntegrand = std::function<double(const FundamentalForms&)>;

inline double integrate_on_grid(const Embedding& e, const std::vector<SurfaceIntegrand>& fs, int n,
                                std::vector<double>* out) {
  const int dim = e.dim();
  std::vector<QuadratureRule> rules;
  for (int i = 0; i < dim; ++i) {
    const auto& per = e.params.periods[static_cast<std::size_t>(i)];
    const auto& rng = e.params.ranges[static_cast<std::size_t>(i)];
    rules.push_back(per ? trapezoid_periodic(n, rng.first, *per) : gauss_legendre(n, rng.first, rng.second));
  }
  std::size_t total = 1;
  for (const auto& r : rules) total *= r.nodes.size();
  const std::size_t nf = fs.size();
  std::vector<double> vals(total * nf);
  parallel_for(total, [&](std::size_t idx) {
    Point u(static_cast<std::size_t>(dim));
    double w = 1.0;
    std::size_t rem = idx;
    for (int i = dim - 1; i >= 0; --i) {
      const auto& r = rules[static_cast<std::size_t>(i)];
      std::size_t k = rem % r.nodes.size();
      rem /= r.nodes.size();
      u[static_cast<std::size_t>(i)] = r.nodes[k];
      w *= r.weights[k];
    }
    FundamentalForms ff = fundamental_forms(e, u);
    const double area = std::sqrt(ff.induced.determinant());
    for (std::size_t f = 0; f < nf; ++f) vals[f * total + idx] = w * area * fs[f](ff);
  });
  for (std::size_t f = 0; f < nf; ++f) {
    (*out)[f] = pairwise_sum(std::span<const double>(vals).subspan(f * total, total));
  }
  return (*out)[0];
}

/// Integrate several functionals with one grid-refinement loop (n vs 2n).
inline std::vector<QuadratureResult> integrate_many(const Embedding& e, const std::vector<SurfaceIntegrand>& fs,
                                                    const GridOptions& opt = {}) {
  validate_embedding(e);
  int n = opt.initial > 0 ? opt.initial : (e.dim() <= 2 ? 64 : 16);
  std::vector<double> prev(fs.size()), next(fs.size());
  integrate_on_grid(e, fs, n, &prev);
  for (int k = 0; k < opt.max_doublings; ++k) {
    n *= 2;
    integrate_on_grid(e, fs, n, &next);
    bool ok = true;
    double worst = 0.0;
    for (std::size_t f = 0; f < fs.size(); ++f) {
      const double ch = std::abs(next[f] - prev[f]);
      worst = std::max(worst, ch);
      if (ch > opt.tolerance * std::max(1.0, std::abs(next[f]))) ok = false;
    }
    if (ok) {
      std::vector<QuadratureResult> out;
      for (std::size_t f = 0; f < fs.size(); ++f) out.push_back({next[f], n, std::abs(next[f] - prev[f])});
      return out;
    }
    prev = next;
  }
  throw GridTooCoarse("quadrature did not converge up to grid " + std::to_string(n));
}

inline QuadratureResult integrate(const Embedding& e, const SurfaceIntegrand& f, const GridOptions& opt = {}) {
  return integrate_many(e, {f}, opt)[0];
}

inline QuadratureResult area(const Embedding& e, const GridOptions& opt = {}) {
  return integrate(e, [](const FundamentalForms&) { return 1.0; }, opt);
}

// ----------------------------------------------------------------- energies

struct EnergyRequest {
  bool willmore_flat = false;
  bool bending = true;
  bool q3 = false;
  bool q4 = false;
  bool gauss_bonnet = false;
  bool euler_from_gauss_bonnet = true;

  /// Everything applicable to the embedding's dimensions.
  static EnergyRequest automatic(const Embedding& e) {
    EnergyRequest r;
    const int d = e.ambient_dim();
    r.q3 = d == 3;
    r.q4 = d == 4;
    r.gauss_bonnet = d == 3;
    r.willmore_flat = d == 3 && e.ambient.label() == "flat";
    return r;
  }
};

struct Energies {
  std::optional<double> willmore_flat;
  std::optional<double> bending;
  std::optional<double> q3;
  std::optional<double> q4;
  std::optional<double> gauss_bonnet;
  std::optional<int> euler_characteristic;
  int grid = 0;
};

/// Gauss curvature of the induced surface metric.
inline double gauss_curvature(const Embedding& e, std::span<const double> u) {
  return 0.5 * induced_geometry(e, u, 0).sc.value();
}

inline bool ambient_is_flat(const Embedding& e) {
  if (e.ambient.label() == "flat") return true;
  Point u(static_cast<std::size_t>(e.dim()));
  for (int i = 0; i < e.dim(); ++i) {
    const auto& r = e.params.ranges[static_cast<std::size_t>(i)];
    u[static_cast<std::size_t>(i)] = 0.37 * r.first + 0.63 * r.second;
  }
  CurvatureBundle cb = curvature(e.ambient, e.image(u));
  double m = 0.0;
  for (double x : cb.riemann) m = std::max(m, std::abs(x));
  return m < 1e-10;
}

inline Energies energies(const Embedding& e, const EnergyRequest& req, const GridOptions& opt = {}) {
  validate_embedding(e);
  const int d = e.ambient_dim();
  if (req.willmore_flat && (d != 3 || !ambient_is_flat(e))) {
    throw WrongDimension("willmore_flat needs a surface in flat 3-space");
  }
  if (req.q3 && d != 3) throw WrongDimension("q3 needs ambient dimension 3");
  if (req.q4 && d != 4) throw WrongDimension("q4 needs ambient dimension 4");
  if (req.gauss_bonnet && d != 3) throw WrongDimension("Gauss-Bonnet needs a surface");
  const bool need_k = req.willmore_flat || req.gauss_bonnet || (req.q3 && !e.euler_characteristic);
  if (req.q3 && !e.euler_characteristic && !req.euler_from_gauss_bonnet) {
    throw MissingEulerCharacteristic("q3 needs the Euler characteristic");
  }

  std::vector<SurfaceIntegrand> fs;
  enum Slot { bend, wf, gb, q4s };
  std::vector<Slot> slots;
  if (req.bending || req.q3) {
    fs.push_back([](const FundamentalForms& ff) { return 0.25 * ff.trace_free_norm_sq(); });
    slots.push_back(bend);
  }
  if (req.willmore_flat) {
    fs.push_back([&e](const FundamentalForms& ff) {
      return ff.mean_curvature * ff.mean_curvature - gauss_curvature(e, ff.param);
    });
    slots.push_back(wf);
  }
  if (need_k) {
    fs.push_back([&e](const FundamentalForms& ff) { return gauss_curvature(e, ff.param); });
    slots.push_back(gb);
  }
  if (req.q4) {
    fs.push_back([&e](const FundamentalForms& ff) {
      Eigen::MatrixXd f = fialkow(e, ff.param);
      return (2.0 / 3.0) * (ff.induced_inv * ff.trace_free * ff.induced_inv * f).trace();
    });
    slots.push_back(q4s);
  }
  Energies out;
  if (fs.empty()) return out;
  auto res = integrate_many(e, fs, opt);
  out.grid = res[0].grid;
  double bending_value = 0.0, gb_value = 0.0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    switch (slots[i]) {
      case bend: bending_value = res[i].value; break;
      case wf: out.willmore_flat = res[i].value; break;
      case gb: gb_value = res[i].value; break;
      case q4s: out.q4 = res[i].value; break;
    }
  }
  if (req.bending) out.bending = bending_value;
  if (req.gauss_bonnet) out.gauss_bonnet = gb_value;
  if (req.q3) {
    int chi = 0;
    if (e.euler_characteristic) {
      chi = *e.euler_characteristic;
    } else {
      chi = static_cast<int>(std::lround(gb_value / (2.0 * std::numbers::pi)));
    }
    out.euler_characteristic = chi;
    out.q3 = std::numbers::pi * chi - bending_value;
  }
  return out;
}

}  // namespace tractorlab
