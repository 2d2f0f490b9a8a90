#pragma once

// Levi-Civita connection and curvature of a chart metric, computed on jets.
//
// Conventions: R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
//   + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb},
// Ric_{bd} = R^a_{bad} (positive on round spheres), J = Sc / (2(d-1)),
// P = (Ric - J g)/(d-2), Laplacian = trace of the Hessian.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tractorlab/field.hpp"
#include "tractorlab/jet.hpp"

namespace tractorlab {

inline Jet truncate_to(const Jet& j, int order) { return j.order() > order ? j.truncated(order) : j; }

/// Inverse of a symmetric jet matrix by Gauss-Jordan on jets (pivoting on values).
inline std::vector<Jet> invert_jet_matrix(std::vector<Jet> m, int d) {
  const int nv = m[0].nvars();
  const int ord = m[0].order();
  double scale = 0.0;
  for (const auto& x : m) scale = std::max(scale, std::abs(x.value()));
  std::vector<Jet> inv(static_cast<std::size_t>(d * d), Jet(nv, ord));
  for (int a = 0; a < d; ++a) inv[static_cast<std::size_t>(a * d + a)] = Jet::constant(nv, ord, 1.0);
  auto at = [d](std::vector<Jet>& v, int r, int c) -> Jet& { return v[static_cast<std::size_t>(r * d + c)]; };
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r) {
      if (std::abs(at(m, r, col).value()) > std::abs(at(m, piv, col).value())) piv = r;
    }
    if (!(std::abs(at(m, piv, col).value()) > 1e-13 * std::max(scale, 1e-300))) {
      throw SingularMetric("metric is not invertible at the evaluation point");
    }
    if (piv != col) {
      for (int c = 0; c < d; ++c) {
        std::swap(at(m, piv, c), at(m, col, c));
        std::swap(at(inv, piv, c), at(inv, col, c));
      }
    }
    Jet r = reciprocal(at(m, col, col));
    for (int c = 0; c < d; ++c) {
      at(m, col, c) = at(m, col, c) * r;
      at(inv, col, c) = at(inv, col, c) * r;
    }
    for (int row = 0; row < d; ++row) {
      if (row == col) continue;
      Jet f = at(m, row, col);
      if (f.max_abs() == 0.0) continue;
      for (int c = 0; c < d; ++c) {
        at(m, row, c) -= f * at(m, col, c);
        at(inv, row, c) -= f * at(inv, col, c);
      }
    }
  }
  return inv;
}

enum class GeometryLevel { christoffel, ricci, riemann };

/// Jets of the metric and its curvature at one point. With output order K the
/// metric is expanded to K+2, Christoffel symbols to K+1 and curvature to K.
struct LocalGeometry {
  int d = 0;
  int order = 0;  // K
  Point point;
  std::vector<Jet> g;      // d*d, order K+2
  std::vector<Jet> ginv;   // d*d, order K+2
  std::vector<Jet> gamma;  // d*d*d, Gamma^a_{bc} at [a*d*d + b*d + c], order K+1
  std::vector<Jet> riem;   // R^a_{bcd} (upper first index), order K; riemann level only
  std::vector<Jet> ric;    // order K
  Jet sc;
  Jet j;
  std::vector<Jet> p;  // Schouten, order K; empty when d < 3
  GeometryLevel level = GeometryLevel::christoffel;

  std::size_t i2(int a, int b) const { return static_cast<std::size_t>(a * d + b); }
  std::size_t i3(int a, int b, int c) const { return static_cast<std::size_t>((a * d + b) * d + c); }
  std::size_t i4(int a, int b, int c, int e) const { return static_cast<std::size_t>(((a * d + b) * d + c) * d + e); }

  Jet ginv_at(int a, int b, int ord) const { return truncate_to(ginv[i2(a, b)], ord); }
  Jet g_at(int a, int b, int ord) const { return truncate_to(g[i2(a, b)], ord); }
  Jet gamma_at(int a, int b, int c, int ord) const { return truncate_to(gamma[i3(a, b, c)], ord); }

  /// Lowered Riemann R_{abcd} = g_{ae} R^e_{bcd}, order K.
  Jet riem_lower(int a, int b, int c, int e) const {
    Jet r(d, order);
    for (int f = 0; f < d; ++f) r += g_at(a, f, order) * riem[i4(f, b, c, e)];
    return r;
  }
};

/// Geometry from metric jets of order K+2 given in the coordinate frame.
inline LocalGeometry local_geometry_from_jets(std::vector<Jet> gj, int d, std::span<const double> point, int order,
                                              GeometryLevel level, Signature sig = Signature::riemannian) {
  LocalGeometry lg;
  lg.d = d;
  lg.order = order;
  lg.level = level;
  lg.point.assign(point.begin(), point.end());
  const int top = order + 2;
  lg.g = std::move(gj);
  if (static_cast<int>(lg.g.size()) != d * d || lg.g[0].order() != top) throw ShapeMismatch("metric jets of wrong shape");
  if (sig == Signature::riemannian) {
    Eigen::MatrixXd gv(d, d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) gv(a, b) = lg.g[lg.i2(a, b)].value();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gv, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) throw SingularMetric("Riemannian metric is not positive definite here");
  }
  lg.ginv = invert_jet_matrix(lg.g, d);

  // d_c g_{ab}
  std::vector<Jet> dg(static_cast<std::size_t>(d * d * d));
  for (int c = 0; c < d; ++c) {
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        dg[lg.i3(c, a, b)] = lg.g[lg.i2(a, b)].derivative(c);
        dg[lg.i3(c, b, a)] = dg[lg.i3(c, a, b)];
      }
    }
  }
  const int go = top - 1;
  lg.gamma.assign(static_cast<std::size_t>(d * d * d), Jet(d, go));
  for (int b = 0; b < d; ++b) {
    for (int c = b; c < d; ++c) {
      for (int e = 0; e < d; ++e) {
        Jet lower = (dg[lg.i3(b, e, c)] + dg[lg.i3(c, e, b)] - dg[lg.i3(e, b, c)]) * 0.5;
        if (lower.max_abs() == 0.0) continue;
        for (int a = 0; a < d; ++a) {
          lg.gamma[lg.i3(a, b, c)] += lg.ginv_at(a, e, go) * lower;
        }
      }
      for (int a = 0; a < d; ++a) lg.gamma[lg.i3(a, c, b)] = lg.gamma[lg.i3(a, b, c)];
    }
  }
  if (level == GeometryLevel::christoffel) return lg;

  const int K = order;
  auto G = [&](int a, int b, int c) { return lg.gamma_at(a, b, c, K); };
  // derivative of Gamma: dGamma[e][a][b][c] = d_e Gamma^a_{bc}, order K
  auto dgamma = [&](int e, int a, int b, int c) { return lg.gamma[lg.i3(a, b, c)].derivative(e); };

  lg.ric.assign(static_cast<std::size_t>(d * d), Jet(d, K));
  if (level == GeometryLevel::riemann) {
    lg.riem.assign(static_cast<std::size_t>(d * d * d * d), Jet(d, K));
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        for (int c = 0; c < d; ++c) {
          for (int e = c + 1; e < d; ++e) {
            Jet r = dgamma(c, a, e, b) - dgamma(e, a, c, b);
            for (int f = 0; f < d; ++f) r += G(a, c, f) * G(f, e, b) - G(a, e, f) * G(f, c, b);
            lg.riem[lg.i4(a, b, c, e)] = r;
            lg.riem[lg.i4(a, b, e, c)] = -r;
          }
        }
      }
    }
    for (int b = 0; b < d; ++b) {
      for (int e = 0; e < d; ++e) {
        for (int a = 0; a < d; ++a) lg.ric[lg.i2(b, e)] += lg.riem[lg.i4(a, b, a, e)];
      }
    }
  } else {
    // Ric_{bd} = d_a G^a_{db} - d_d G^a_{ab} + G^a_{ae} G^e_{db} - G^a_{de} G^e_{ab}
    std::vector<Jet> trace(static_cast<std::size_t>(d), Jet(d, K));
    for (int e = 0; e < d; ++e) {
      for (int a = 0; a < d; ++a) trace[static_cast<std::size_t>(e)] += G(a, a, e);
    }
    for (int b = 0; b < d; ++b) {
      for (int dd = b; dd < d; ++dd) {
        Jet r(d, K);
        for (int a = 0; a < d; ++a) r += dgamma(a, a, dd, b);
        Jet tr_full(d, K + 1);
        for (int a = 0; a < d; ++a) tr_full += lg.gamma[lg.i3(a, a, b)];
        r -= tr_full.derivative(dd);
        for (int e = 0; e < d; ++e) {
          r += trace[static_cast<std::size_t>(e)] * G(e, dd, b);
          for (int a = 0; a < d; ++a) r -= G(a, dd, e) * G(e, a, b);
        }
        lg.ric[lg.i2(b, dd)] = r;
        lg.ric[lg.i2(dd, b)] = r;
      }
    }
  }
  lg.sc = Jet(d, K);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) lg.sc += lg.ginv_at(a, b, K) * lg.ric[lg.i2(a, b)];
  }
  lg.j = lg.sc / (2.0 * (d - 1));
  if (d >= 3) {
    lg.p.assign(static_cast<std::size_t>(d * d), Jet(d, K));
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        lg.p[lg.i2(a, b)] = (lg.ric[lg.i2(a, b)] - lg.j * lg.g_at(a, b, K)) / (d - 2.0);
      }
    }
  }
  return lg;
}

inline LocalGeometry local_geometry(const MetricField& metric, std::span<const double> point, int order,
                                    GeometryLevel level = GeometryLevel::ricci) {
  const int d = metric.dim();
  auto seeds = seed_point(point, order + 2);
  std::vector<Jet> g(static_cast<std::size_t>(d * d));
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      g[static_cast<std::size_t>(a * d + b)] = metric.component(a, b)(seeds);
      g[static_cast<std::size_t>(b * d + a)] = g[static_cast<std::size_t>(a * d + b)];
    }
  }
  return local_geometry_from_jets(std::move(g), d, point, order, level, metric.signature());
}

/// Covariant Hessian of f (f at order K+2), returned at order K.
inline std::vector<Jet> hessian_jets(const LocalGeometry& lg, const Jet& f) {
  const int d = lg.d;
  const int K = f.order() - 2;
  std::vector<Jet> df;
  for (int a = 0; a < d; ++a) df.push_back(f.derivative(a));
  std::vector<Jet> h(static_cast<std::size_t>(d * d), Jet(d, K));
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      Jet v = df[static_cast<std::size_t>(a)].derivative(b);
      for (int c = 0; c < d; ++c) v -= lg.gamma_at(c, a, b, K) * truncate_to(df[static_cast<std::size_t>(c)], K);
      h[lg.i2(a, b)] = v;
      h[lg.i2(b, a)] = v;
    }
  }
  return h;
}

/// Laplacian (trace of the Hessian) of f at order K+2, returned at order K.
inline Jet laplacian_jet(const LocalGeometry& lg, const Jet& f) {
  const int K = f.order() - 2;
  auto h = hessian_jets(lg, f);
  Jet r(lg.d, K);
  for (int a = 0; a < lg.d; ++a) {
    for (int b = 0; b < lg.d; ++b) r += lg.ginv_at(a, b, K) * h[lg.i2(a, b)];
  }
  return r;
}

/// |df|^2 with f at order K+1 (result order K).
inline Jet grad_norm_sq_jet(const LocalGeometry& lg, const Jet& f) {
  const int K = f.order() - 1;
  std::vector<Jet> df;
  for (int a = 0; a < lg.d; ++a) df.push_back(f.derivative(a));
  Jet r(lg.d, K);
  for (int a = 0; a < lg.d; ++a) {
    for (int b = 0; b < lg.d; ++b) {
      r += lg.ginv_at(a, b, K) * df[static_cast<std::size_t>(a)] * df[static_cast<std::size_t>(b)];
    }
  }
  return r;
}

/// Values of the curvature tensors at a point, coordinate frame.
struct CurvatureBundle {
  int d = 0;
  Point point;
  std::vector<double> christoffel;  // Gamma^a_{bc} at [(a*d+b)*d+c]
  std::vector<double> riemann;      // R_{abcd} (all lowered) at [((a*d+b)*d+c)*d+e]
  Eigen::MatrixXd metric;
  Eigen::MatrixXd inverse_metric;
  Eigen::MatrixXd ricci;
  double scalar = 0.0;
  double j = 0.0;
  Eigen::MatrixXd schouten;             // empty for d < 3
  Eigen::MatrixXd schouten_trace_free;  // empty for d < 3

  double gamma(int a, int b, int c) const { return christoffel[static_cast<std::size_t>((a * d + b) * d + c)]; }
  double riem(int a, int b, int c, int e) const {
    return riemann[static_cast<std::size_t>(((a * d + b) * d + c) * d + e)];
  }
};

inline Eigen::MatrixXd to_matrix(const std::vector<Jet>& v, int d) {
  Eigen::MatrixXd m(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) m(a, b) = v[static_cast<std::size_t>(a * d + b)].value();
  }
  return m;
}

inline CurvatureBundle curvature(const MetricField& metric, std::span<const double> point) {
  LocalGeometry lg = local_geometry(metric, point, 0, GeometryLevel::riemann);
  const int d = lg.d;
  CurvatureBundle cb;
  cb.d = d;
  cb.point = lg.point;
  for (const auto& x : lg.gamma) cb.christoffel.push_back(x.value());
  cb.riemann.resize(static_cast<std::size_t>(d * d * d * d));
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c) {
        for (int e = 0; e < d; ++e) cb.riemann[lg.i4(a, b, c, e)] = lg.riem_lower(a, b, c, e).value();
      }
    }
  }
  cb.metric = to_matrix(lg.g, d);
  cb.inverse_metric = to_matrix(lg.ginv, d);
  cb.ricci = to_matrix(lg.ric, d);
  cb.scalar = lg.sc.value();
  cb.j = lg.j.value();
  if (d >= 3) {
    cb.schouten = to_matrix(lg.p, d);
    cb.schouten_trace_free = cb.schouten - cb.metric * (cb.j / d);
  }
  return cb;
}

struct DifferentialOps {
  Eigen::VectorXd gradient;  // covector d_a f
  Eigen::MatrixXd hessian;   // nabla_a nabla_b f
  double laplacian = 0.0;
};

inline DifferentialOps differential_operators(const MetricField& metric, const ScalarField& f,
                                              std::span<const double> point) {
  LocalGeometry lg = local_geometry(metric, point, 0, GeometryLevel::christoffel);
  Jet fj = f.at(point, 2);
  DifferentialOps out;
  out.gradient.resize(lg.d);
  for (int a = 0; a < lg.d; ++a) out.gradient(a) = fj.derivative(a).value();
  out.hessian = to_matrix(hessian_jets(lg, fj), lg.d);
  out.laplacian = laplacian_jet(lg, fj).value();
  return out;
}

/// Trace-free part of a symmetric matrix with respect to g.
inline Eigen::MatrixXd trace_free(const Eigen::MatrixXd& x, const Eigen::MatrixXd& g) {
  Eigen::MatrixXd ginv = g.inverse();
  double tr = (ginv * x).trace();
  return x - g * (tr / static_cast<double>(g.rows()));
}

/// Max-norm residual of the trace-free Schouten transformation law under
/// g -> Omega^2 g with Upsilon = d log Omega.
inline double conformal_transform_check(const MetricField& metric, const ScalarField& omega,
                                        std::span<const double> point) {
  if (!(omega.value(point) > 0.0)) throw NonpositiveFactor("conformal factor must be positive");
  const int d = metric.dim();
  if (d < 3) throw DimensionTooLow("trace-free Schouten needs d >= 3");
  CurvatureBundle before = curvature(metric, point);
  CurvatureBundle after = curvature(metric.rescaled(omega), point);
  LocalGeometry lg = local_geometry(metric, point, 0, GeometryLevel::christoffel);
  Jet logo = log(omega.at(point, 2));
  Eigen::MatrixXd dups = to_matrix(hessian_jets(lg, logo), d);  // nabla_a Upsilon_b
  Eigen::VectorXd ups(d);
  for (int a = 0; a < d; ++a) ups(a) = logo.derivative(a).value();
  Eigen::MatrixXd predicted = before.schouten_trace_free - trace_free(dups, before.metric) +
                              trace_free(ups * ups.transpose(), before.metric);
  return (after.schouten_trace_free - predicted).cwiseAbs().maxCoeff();
}

/// nabla^a (Ric_ab - Sc g_ab / 2) at a point; vanishes identically.
inline Eigen::VectorXd einstein_divergence(const MetricField& metric, std::span<const double> point) {
  LocalGeometry lg = local_geometry(metric, point, 1, GeometryLevel::ricci);
  const int d = lg.d;
  std::vector<Jet> ein(static_cast<std::size_t>(d * d));
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) ein[lg.i2(a, b)] = lg.ric[lg.i2(a, b)] - lg.sc * lg.g_at(a, b, 1) * 0.5;
  }
  Eigen::VectorXd div = Eigen::VectorXd::Zero(d);
  for (int b = 0; b < d; ++b) {
    for (int a = 0; a < d; ++a) {
      for (int c = 0; c < d; ++c) {
        double cov = ein[lg.i2(a, b)].derivative(c).value();
        for (int e = 0; e < d; ++e) {
          cov -= lg.gamma[lg.i3(e, c, a)].value() * ein[lg.i2(e, b)].value();
          cov -= lg.gamma[lg.i3(e, c, b)].value() * ein[lg.i2(a, e)].value();
        }
        div(b) += lg.ginv[lg.i2(a, c)].value() * cov;
      }
    }
  }
  return div;
}

}  // namespace tractorlab
