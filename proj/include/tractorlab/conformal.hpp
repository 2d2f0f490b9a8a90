#pragma once

// Conformal densities as (reference metric, representative) pairs, and the
// S-curvature S = |d sigma|^2 - (2 sigma / d)(Laplacian sigma + J sigma).

#include <cmath>
#include <optional>
#include <string>

#include "tractorlab/field.hpp"
#include "tractorlab/riemann.hpp"

namespace tractorlab {

struct Density {
  double weight = 0.0;
  MetricField metric;
  ScalarField rep;

  int dim() const { return metric.dim(); }
  double value(std::span<const double> p) const { return rep.value(p); }

  /// [Omega^2 g, Omega^w f].
  Density rescale(const ScalarField& omega) const {
    MetricField m = metric.rescaled(omega);
    const double w = weight;
    auto checked = omega.map([](const Jet& j) {
      if (!(j.value() > 0.0)) throw NonpositiveFactor("conformal factor value " + std::to_string(j.value()));
      return j;
    });
    ScalarField r = w == 0.0 ? rep : pow(checked, w) * rep;
    return Density{w, std::move(m), std::move(r)};
  }

  /// The same density expressed against `target`, which must share a
  /// conformal root with the current reference metric.
  Density in_metric(const MetricField& target) const {
    auto omega = metric.factor_to(target);
    if (!omega) throw ScaleMismatch("metrics are not related by a tracked conformal factor");
    if (weight == 0.0) return Density{0.0, target, rep};
    return Density{weight, target, pow(*omega, weight) * rep};
  }
};

inline void require_weight(const Density& s, double w, const char* what) {
  if (s.weight != w) {
    throw BadParameters(std::string(what) + " needs weight " + std::to_string(w) + ", got " +
                        std::to_string(s.weight));
  }
}

/// S as a jet of order K; `sigma` must have order K+2 and `lg` order >= K.
inline Jet s_curvature_jet(const LocalGeometry& lg, const Jet& sigma) {
  const int K = sigma.order() - 2;
  Jet lap = laplacian_jet(lg, sigma);
  Jet s0 = truncate_to(sigma, K);
  Jet grad = grad_norm_sq_jet(lg, truncate_to(sigma, K + 1));
  return grad - s0 * (lap + truncate_to(lg.j, K) * s0) * (2.0 / lg.d);
}

inline double s_curvature(const Density& sigma, std::span<const double> point) {
  require_weight(sigma, 1.0, "S-curvature");
  LocalGeometry lg = local_geometry(sigma.metric, point, 0, GeometryLevel::ricci);
  return s_curvature_jet(lg, sigma.rep.at(point, 2)).value();
}

/// S as a field, differentiable to any order.
inline ScalarField s_curvature_field(const Density& sigma) {
  require_weight(sigma, 1.0, "S-curvature");
  MetricField metric = sigma.metric;
  ScalarField rep = sigma.rep;
  return ScalarField::local(sigma.dim(), [metric, rep](std::span<const double> p, int order) {
    LocalGeometry lg = local_geometry(metric, p, order, GeometryLevel::ricci);
    return s_curvature_jet(lg, rep.at(p, order + 2));
  });
}

/// -Sc / (d(d-1)) of sigma^{-2} g computed by the curvature engine; defined where sigma != 0.
inline double s_from_scalar_curvature(const Density& sigma, std::span<const double> point) {
  require_weight(sigma, 1.0, "S-curvature");
  if (sigma.value(point) == 0.0) throw DomainError("scale vanishes at the evaluation point");
  ScalarField inv = sigma.rep.map([](const Jet& j) { return reciprocal(j.value() < 0 ? -j : j); });
  const int d = sigma.dim();
  return -curvature(sigma.metric.rescaled(inv), point).scalar / (d * (d - 1.0));
}

struct ZeroRegularity {
  Point zero;
  double s = 0.0;
  double grad_norm = 0.0;
  bool regular = false;  // S > 0 implies |d sigma| > 0
};

/// Locate a zero of sigma on the segment p0 + t dir, t in [0, 1], by bisection,
/// then report S and |d sigma| there. Returns nullopt without a sign change.
inline std::optional<ZeroRegularity> zero_on_segment(const Density& sigma, std::span<const double> p0,
                                                     std::span<const double> dir) {
  const std::size_t n = p0.size();
  auto at = [&](double t) {
    Point q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = p0[i] + t * dir[i];
    return q;
  };
  double a = 0.0, b = 1.0;
  double fa = sigma.value(at(a)), fb = sigma.value(at(b));
  if (fa == 0.0) b = a;
  else if (fb == 0.0) a = b;
  else if ((fa > 0) == (fb > 0)) return std::nullopt;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    double m = 0.5 * (a + b);
    double fm = sigma.value(at(m));
    if (fm == 0.0) {
      a = b = m;
      break;
    }
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  ZeroRegularity z;
  z.zero = at(0.5 * (a + b));
  z.s = s_curvature(sigma, z.zero);
  LocalGeometry lg = local_geometry(sigma.metric, z.zero, 0, GeometryLevel::christoffel);
  z.grad_norm = std::sqrt(std::max(0.0, grad_norm_sq_jet(lg, sigma.rep.at(z.zero, 1)).value()));
  z.regular = !(z.s > 0.0) || z.grad_norm > 0.0;
  return z;
}

}  // namespace tractorlab
