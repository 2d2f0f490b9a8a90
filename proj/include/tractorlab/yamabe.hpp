#pragma once

// Order-by-order solution of S(sigma) = 1 near the zero locus of sigma.
//
// Adding sigma^{k+1} alpha to sigma changes S by
//   sigma^k alpha |d sigma|^2 * 2(k+1)(d-k)/d + O(sigma^{k+1}),
// so sigma' = sigma (1 + lambda_k (S - 1)), lambda_k = -d / (2(k+1)(d-k)),
// raises the order of S - 1 from k to k+1. At k = d the coefficient vanishes.
// Quotients by powers of sigma are taken on one-variable jets along the
// normal ray through a foot point.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tractorlab/conformal.hpp"
#include "tractorlab/hypersurface.hpp"
#include "tractorlab/tractor.hpp"

namespace tractorlab {

struct DefiningDensity {
  Density sigma;
  std::optional<Embedding> surface;
  std::vector<Point> feet;  // sample points on the zero locus (ambient chart)
  int unit_order = 0;       // verified k with S - 1 = O(sigma^k)
  std::vector<double> stage_orders;

  int dim() const { return sigma.dim(); }
};

struct RayOptions {
  int points = 8;
  double t_min = 1e-4;
  double t_max = 1e-1;
  double noise_floor = 1e-10;
  int jet_order = 0;  // 0: chosen from the expected exponent
};

/// One-variable Taylor coefficients of S - 1 and sigma along t -> x0 + t n,
/// n = grad sigma / |grad sigma| at the foot point x0.
struct RayJets {
  std::vector<double> residual;  // S - 1
  std::vector<double> sigma;
  Point direction;
};

inline Point unit_normal_direction(const Density& sigma, std::span<const double> x0) {
  LocalGeometry lg = local_geometry(sigma.metric, x0, 0, GeometryLevel::christoffel);
  Jet s = sigma.rep.at(x0, 1);
  const int d = lg.d;
  Point v(static_cast<std::size_t>(d), 0.0);
  double len2 = 0.0;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      v[static_cast<std::size_t>(a)] += lg.ginv[lg.i2(a, b)].value() * s.derivative(b).value();
    }
  }
  for (int a = 0; a < d; ++a) len2 += v[static_cast<std::size_t>(a)] * s.derivative(a).value();
  if (!(len2 > 1e-20)) throw FitFailure("defining density has a degenerate gradient at the foot point");
  for (double& x : v) x /= std::sqrt(len2);
  return v;
}

inline RayJets ray_jets(const Density& sigma, std::span<const double> x0, int order) {
  RayJets r;
  r.direction = unit_normal_direction(sigma, x0);
  // One-variable seeds x_i = x0_i + t n_i; local fields re-expand along them.
  std::vector<Jet> seeds;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    Jet s = Jet::constant(1, order, x0[i]);
    if (order >= 1) s.coeffs_mut()[1] = r.direction[i];
    seeds.push_back(s);
  }
  ScalarField s_field = s_curvature_field(sigma);
  Jet a = s_field(seeds) - 1.0;
  Jet s = sigma.rep(seeds);
  r.residual.assign(a.coeffs().begin(), a.coeffs().end());
  r.sigma.assign(s.coeffs().begin(), s.coeffs().end());
  return r;
}

namespace detail {

inline double poly_eval(const std::vector<double>& c, double t) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
  return v;
}

}  // namespace detail

/// Least-squares slope of log|S - 1| against log|sigma| over a geometric ladder
/// of ray distances; +infinity when S - 1 vanishes to the working order.
inline double residual_order(const Density& sigma, std::span<const double> x0, const RayOptions& opt = {},
                             int expected = 4) {
  const int order = opt.jet_order > 0 ? opt.jet_order : std::max(expected + 2, 6);
  RayJets rj = ray_jets(sigma, x0, order);
  double scale = 1.0;
  for (double c : rj.sigma) scale = std::max(scale, std::abs(c));
  std::vector<double> a = rj.residual;
  bool all_zero = true;
  for (double& c : a) {
    if (std::abs(c) <= opt.noise_floor * scale) c = 0.0;
    else all_zero = false;
  }
  if (all_zero) return std::numeric_limits<double>::infinity();
  if (opt.points < 2 || !(opt.t_min > 0.0) || !(opt.t_max > opt.t_min)) throw FitFailure("bad ray ladder");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = opt.points;
  for (int i = 0; i < n; ++i) {
    const double t = opt.t_min * std::pow(opt.t_max / opt.t_min, static_cast<double>(i) / (n - 1));
    const double av = std::abs(detail::poly_eval(a, t));
    const double sv = std::abs(detail::poly_eval(rj.sigma, t));
    if (!(av > 0.0) || !(sv > 0.0)) throw FitFailure("ray values vanish on the ladder");
    const double x = std::log(sv), y = std::log(av);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 1e-12)) throw FitFailure("ill-conditioned ray fit");
  return (n * sxy - sx * sy) / den;
}

inline double improvement_coefficient(int d, int k) {
  if (k == d) throw ObstructionOrder("no smooth correction at order d: the obstruction density appears");
  if (k < 1 || k > d) throw BadParameters("improvement order must lie in 1..d-1");
  return -static_cast<double>(d) / (2.0 * (k + 1) * (d - k));
}

/// sigma / sqrt(S(sigma)); S must be positive wherever it is evaluated.
inline DefiningDensity normalize(const DefiningDensity& in) {
  const Density& s = in.sigma;
  require_weight(s, 1.0, "normalize");
  ScalarField sc = s_curvature_field(s);
  for (const auto& p : in.feet) {
    const double v = sc.value(p);
    if (!(v > 0.0)) throw NonpositiveS("S = " + std::to_string(v) + " at a sample point");
  }
  ScalarField checked = sc.map([](const Jet& j) {
    if (!(j.value() > 0.0)) throw NonpositiveS("S = " + std::to_string(j.value()));
    return j;
  });
  DefiningDensity out = in;
  out.sigma.rep = s.rep / sqrt(checked);
  out.unit_order = 1;
  return out;
}

struct ImproveOptions {
  bool verify_input = true;
  double order_slack = 0.1;
  RayOptions ray;
};

/// The verbatim first-step formula sigma (1 - d/(4(d-1)) (S - 1)).
inline ScalarField first_improvement_field(const Density& s) {
  const int d = s.dim();
  return s.rep * (1.0 - (static_cast<double>(d) / (4.0 * (d - 1))) * (s_curvature_field(s) - 1.0));
}

inline DefiningDensity improve(const DefiningDensity& in, int k, const ImproveOptions& opt = {}) {
  const int d = in.dim();
  const double lambda = improvement_coefficient(d, k);
  if (opt.verify_input) {
    if (in.feet.empty()) throw OrderNotMet("no foot points to verify the input order");
    for (const auto& p : in.feet) {
      const double ord = residual_order(in.sigma, p, opt.ray, k);
      if (ord < k - opt.order_slack) {
        throw OrderNotMet("input residual order " + std::to_string(ord) + " < " + std::to_string(k));
      }
    }
  }
  DefiningDensity out = in;
  out.sigma.rep = in.sigma.rep * (1.0 + lambda * (s_curvature_field(in.sigma) - 1.0));
  out.unit_order = k + 1;
  return out;
}

struct ExpandOptions {
  ImproveOptions improve;
  bool record_orders = true;
};

/// normalize, then improve for k = 1..m-1. Stage orders are measured at the
/// first foot point when recording is on.
inline DefiningDensity expand(const DefiningDensity& in, int m, const ExpandOptions& opt = {}) {
  const int d = in.dim();
  if (m < 1 || m > d) throw BadParameters("target order must lie in 1..d");
  DefiningDensity cur = normalize(in);
  cur.stage_orders.clear();
  auto record = [&](int expected) {
    if (opt.record_orders && !cur.feet.empty()) {
      cur.stage_orders.push_back(residual_order(cur.sigma, cur.feet.front(), opt.improve.ray, expected));
    }
  };
  record(1);
  ImproveOptions io = opt.improve;
  io.verify_input = io.verify_input && !opt.record_orders;
  for (int k = 1; k < m; ++k) {
    if (opt.record_orders && !cur.stage_orders.empty() && cur.stage_orders.back() < k - io.order_slack) {
      throw OrderNotMet("stage " + std::to_string(k) + " residual order " + std::to_string(cur.stage_orders.back()));
    }
    cur = improve(cur, k, io);
    record(k + 1);
  }
  return cur;
}

struct ObstructionSample {
  Point point;
  double value = 0.0;
};

/// lim (S - 1) / sigma^d along the normal ray, by Taylor division.
inline ObstructionSample obstruction(const DefiningDensity& unit, std::span<const double> x0) {
  const int d = unit.dim();
  RayJets rj = ray_jets(unit.sigma, x0, d);
  const double s1 = rj.sigma.size() > 1 ? rj.sigma[1] : 0.0;
  if (!(std::abs(s1) > 1e-8)) throw FitFailure("defining density has vanishing normal slope");
  return ObstructionSample{Point(x0.begin(), x0.end()), rj.residual[static_cast<std::size_t>(d)] / std::pow(s1, d)};
}

}  // namespace tractorlab
