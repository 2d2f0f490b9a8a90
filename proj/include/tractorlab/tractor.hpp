#pragma once

// Standard tractors in a scale. A section of weight w is stored through its
// slot representatives (top, middle covector, bottom) relative to a metric g
// of the conformal class; a weight-u density is represented by a function
// that picks up Omega^u when g -> Omega^2 g.
//
// Scale change g -> Omega^2 g, Upsilon = d log Omega:
//   (v+, v, v-) -> Omega^w (Omega v+, Omega (v + Upsilon v+),
//                           Omega^{-1} (v- - <Upsilon, v> - |Upsilon|^2 v+ / 2))
// Connection:
//   nabla_a (v+, v, v-) = (d_a v+ - v_a, nabla_a v_b + g_ab v- + P_ab v+, d_a v- - P_a^b v_b)

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tractorlab/conformal.hpp"
#include "tractorlab/field.hpp"
#include "tractorlab/riemann.hpp"

namespace tractorlab {

struct Tractor {
  MetricField scale;
  Point point;
  double weight = 0.0;
  double top = 0.0;
  Eigen::VectorXd mid;
  double bottom = 0.0;

  int dim() const { return static_cast<int>(mid.size()); }

  Tractor& operator+=(const Tractor& o) {
    top += o.top;
    mid += o.mid;
    bottom += o.bottom;
    return *this;
  }
  friend Tractor operator+(Tractor a, const Tractor& b) { return a += b; }
  friend Tractor operator-(Tractor a, const Tractor& b) {
    a.top -= b.top;
    a.mid -= b.mid;
    a.bottom -= b.bottom;
    return a;
  }
  friend Tractor operator*(Tractor a, double s) {
    a.top *= s;
    a.mid *= s;
    a.bottom *= s;
    return a;
  }
  friend Tractor operator*(double s, const Tractor& a) { return a * s; }

  /// Components as a (d+2)-vector (top, mid..., bottom).
  Eigen::VectorXd stacked() const {
    Eigen::VectorXd v(dim() + 2);
    v(0) = top;
    v.segment(1, dim()) = mid;
    v(dim() + 1) = bottom;
    return v;
  }

  double max_slot() const { return stacked().cwiseAbs().maxCoeff(); }
};

inline Eigen::MatrixXd metric_values(const MetricField& g, std::span<const double> p) {
  const int d = g.dim();
  Eigen::MatrixXd m(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) m(a, b) = g.component(a, b).value(p);
  }
  return m;
}

/// Gram matrix of the tractor metric in the slot basis at a point.
inline Eigen::MatrixXd tractor_gram(const MetricField& g, std::span<const double> p) {
  const int d = g.dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 2, d + 2);
  h(0, d + 1) = h(d + 1, 0) = 1.0;
  h.block(1, 1, d, d) = metric_values(g, p).inverse();
  return h;
}

struct SignatureCount {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

inline SignatureCount tractor_signature(const MetricField& g, std::span<const double> p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tractor_gram(g, p), Eigen::EigenvaluesOnly);
  SignatureCount s;
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double e = es.eigenvalues()(i);
    if (std::abs(e) <= 1e-12 * scale) ++s.zero;
    else if (e > 0) ++s.positive;
    else ++s.negative;
  }
  return s;
}

inline Tractor make_tractor(const MetricField& scale, std::span<const double> p, double weight, double top,
                            Eigen::VectorXd mid, double bottom) {
  if (mid.size() != scale.dim()) throw ShapeMismatch("middle slot length differs from the dimension");
  return Tractor{scale, Point(p.begin(), p.end()), weight, top, std::move(mid), bottom};
}

/// Canonical tractor X = (0, 0, 1), weight 1, in any scale.
inline Tractor canonical_x(const MetricField& scale, std::span<const double> p) {
  return make_tractor(scale, p, 1.0, 0.0, Eigen::VectorXd::Zero(scale.dim()), 1.0);
}

/// Re-express U in the scale `target` (same conformal class).
inline Tractor change_scale(const Tractor& u, const MetricField& target) {
  if (u.scale.same_as(target)) return u;
  auto omega_f = u.scale.factor_to(target);
  if (!omega_f) throw ScaleMismatch("scales do not belong to one tracked conformal class");
  Jet om = (*omega_f).at(u.point, 1);
  const double omega = om.value();
  if (!(omega > 0.0)) throw NonpositiveScale("scale ratio is not positive at the point");
  const int d = u.dim();
  Eigen::VectorXd ups(d);
  for (int a = 0; a < d; ++a) ups(a) = om.derivative(a).value() / omega;
  Eigen::MatrixXd ginv = metric_values(u.scale, u.point).inverse();
  const double wfac = std::pow(omega, u.weight);
  Tractor r = u;
  r.scale = target;
  r.top = wfac * omega * u.top;
  r.mid = wfac * omega * (u.mid + ups * u.top);
  r.bottom = wfac / omega * (u.bottom - ups.dot(ginv * u.mid) - 0.5 * ups.dot(ginv * ups) * u.top);
  return r;
}

/// h(U, V), a density of weight w_U + w_V represented in U's scale.
inline double tractor_metric(const Tractor& u, const Tractor& v0) {
  if (u.point != v0.point) throw ShapeMismatch("tractors live at different points");
  Tractor v = change_scale(v0, u.scale);
  Eigen::MatrixXd ginv = metric_values(u.scale, u.point).inverse();
  return u.top * v.bottom + u.bottom * v.top + u.mid.dot(ginv * v.mid);
}

/// Jet-valued tractor in a fixed scale, all slots of one order.
struct TractorJet {
  Jet top;
  std::vector<Jet> mid;
  Jet bottom;

  int order() const { return top.order(); }
  TractorJet truncated(int k) const {
    TractorJet t{truncate_to(top, k), {}, truncate_to(bottom, k)};
    for (const auto& m : mid) t.mid.push_back(truncate_to(m, k));
    return t;
  }
};

/// Tractor field of fixed weight against a scale: evaluates to jets of any order.
struct TractorField {
  MetricField scale;
  double weight = 0.0;
  std::function<TractorJet(std::span<const double>, int)> eval;

  int dim() const { return scale.dim(); }

  Tractor at(std::span<const double> p) const {
    TractorJet t = eval(p, 0);
    Eigen::VectorXd mid(dim());
    for (int a = 0; a < dim(); ++a) mid(a) = t.mid[static_cast<std::size_t>(a)].value();
    return make_tractor(scale, p, weight, t.top.value(), std::move(mid), t.bottom.value());
  }
};

/// h(U, V) as a jet in one scale.
inline Jet tractor_metric_jet(const LocalGeometry& lg, const TractorJet& u, const TractorJet& v) {
  const int k = std::min(u.order(), v.order());
  Jet r = truncate_to(u.top, k) * truncate_to(v.bottom, k) + truncate_to(u.bottom, k) * truncate_to(v.top, k);
  for (int a = 0; a < lg.d; ++a) {
    for (int b = 0; b < lg.d; ++b) {
      r += lg.ginv_at(a, b, k) * truncate_to(u.mid[static_cast<std::size_t>(a)], k) *
           truncate_to(v.mid[static_cast<std::size_t>(b)], k);
    }
  }
  return r;
}

inline const std::vector<Jet>& require_schouten(const LocalGeometry& lg) {
  if (lg.d < 3) throw DimensionTooLow("the tractor connection needs the Schouten tensor, d >= 3");
  return lg.p;
}

/// Scale tractor I = (sigma, nabla sigma, -(Laplacian + J) sigma / d) at order K;
/// sigma at order K+2, lg of order >= K at the ricci level.
inline TractorJet scale_tractor_jet(const LocalGeometry& lg, const Jet& sigma) {
  const int K = sigma.order() - 2;
  TractorJet t;
  t.top = truncate_to(sigma, K);
  for (int a = 0; a < lg.d; ++a) t.mid.push_back(truncate_to(sigma.derivative(a), K));
  t.bottom = -(laplacian_jet(lg, sigma) + truncate_to(lg.j, K) * t.top) / static_cast<double>(lg.d);
  return t;
}

inline TractorField scale_tractor(const Density& sigma) {
  require_weight(sigma, 1.0, "scale tractor");
  MetricField g = sigma.metric;
  ScalarField rep = sigma.rep;
  return TractorField{g, 0.0, [g, rep](std::span<const double> p, int order) {
                        LocalGeometry lg = local_geometry(g, p, order, GeometryLevel::ricci);
                        return scale_tractor_jet(lg, rep.at(p, order + 2));
                      }};
}

/// Thomas D of a weight-w density: (w(d+2w-2) f, (d+2w-2) nabla f, -(Laplacian + wJ) f), weight w-1.
inline TractorJet thomas_d_jet(const LocalGeometry& lg, const Jet& f, double w) {
  const int K = f.order() - 2;
  const double c = lg.d + 2.0 * w - 2.0;
  TractorJet t;
  t.top = truncate_to(f, K) * (w * c);
  for (int a = 0; a < lg.d; ++a) t.mid.push_back(truncate_to(f.derivative(a), K) * c);
  t.bottom = -(laplacian_jet(lg, f) + truncate_to(lg.j, K) * truncate_to(f, K) * w);
  return t;
}

inline TractorField thomas_d(const Density& f) {
  MetricField g = f.metric;
  ScalarField rep = f.rep;
  const double w = f.weight;
  return TractorField{g, w - 1.0, [g, rep, w](std::span<const double> p, int order) {
                        LocalGeometry lg = local_geometry(g, p, order, GeometryLevel::ricci);
                        return thomas_d_jet(lg, rep.at(p, order + 2), w);
                      }};
}

/// I.D f expanded in the trivialization of sigma's metric:
/// (d+2w-2)(<nabla sigma, nabla f> + w rho f) - sigma (Laplacian + wJ) f.
inline double laplace_robin(const Density& sigma, const Density& f, std::span<const double> p) {
  require_weight(sigma, 1.0, "Laplace-Robin scale");
  Density fs = f.metric.same_as(sigma.metric) ? f : f.in_metric(sigma.metric);
  LocalGeometry lg = local_geometry(sigma.metric, p, 0, GeometryLevel::ricci);
  Jet s = sigma.rep.at(p, 2);
  Jet fj = fs.rep.at(p, 2);
  TractorJet i = scale_tractor_jet(lg, s);
  const double w = f.weight;
  const double c = lg.d + 2.0 * w - 2.0;
  double grad = 0.0;
  for (int a = 0; a < lg.d; ++a) {
    for (int b = 0; b < lg.d; ++b) {
      grad += lg.ginv[lg.i2(a, b)].value() * s.derivative(a).value() * fj.derivative(b).value();
    }
  }
  const double yam = laplacian_jet(lg, fj).value() + w * lg.j.value() * fj.value();
  return c * (grad + w * i.bottom.value() * fj.value()) - s.value() * yam;
}

/// nabla_a U for each coordinate direction a, at the point.
inline std::vector<Tractor> tractor_derivative_all(const TractorField& u, std::span<const double> p) {
  const int d = u.dim();
  LocalGeometry lg = local_geometry(u.scale, p, 0, GeometryLevel::ricci);
  const auto& P = require_schouten(lg);
  TractorJet t = u.eval(p, 1);
  std::vector<Tractor> out;
  for (int a = 0; a < d; ++a) {
    Eigen::VectorXd mid(d);
    double bottom = t.bottom.derivative(a).value();
    for (int b = 0; b < d; ++b) {
      double v = t.mid[static_cast<std::size_t>(b)].derivative(a).value();
      for (int c = 0; c < d; ++c) v -= lg.gamma[lg.i3(c, a, b)].value() * t.mid[static_cast<std::size_t>(c)].value();
      v += lg.g[lg.i2(a, b)].value() * t.bottom.value() + P[lg.i2(a, b)].value() * t.top.value();
      mid(b) = v;
      for (int c = 0; c < d; ++c) {
        bottom -= P[lg.i2(a, b)].value() * lg.ginv[lg.i2(b, c)].value() * t.mid[static_cast<std::size_t>(c)].value();
      }
    }
    double top = t.top.derivative(a).value() - t.mid[static_cast<std::size_t>(a)].value();
    out.push_back(make_tractor(u.scale, p, u.weight, top, std::move(mid), bottom));
  }
  return out;
}

/// nabla_X U for a coordinate direction vector X.
inline Tractor tractor_derivative(const TractorField& u, std::span<const double> direction,
                                  std::span<const double> p) {
  if (static_cast<int>(direction.size()) != u.dim()) throw ShapeMismatch("direction length differs from dimension");
  auto all = tractor_derivative_all(u, p);
  Tractor r = all[0] * direction[0];
  for (int a = 1; a < u.dim(); ++a) r += all[static_cast<std::size_t>(a)] * direction[static_cast<std::size_t>(a)];
  return r;
}

/// Parametrized path in chart coordinates, t in [0, 1].
struct Curve {
  std::function<Point(double)> position;
  std::function<Point(double)> velocity;
};

inline Curve straight_path(Point a, Point b) {
  Point v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = b[i] - a[i];
  return Curve{[a, v](double t) {
                 Point x(a.size());
                 for (std::size_t i = 0; i < a.size(); ++i) x[i] = a[i] + t * v[i];
                 return x;
               },
               [v](double) { return v; }};
}

/// Piecewise-linear path through the given points, one straight piece per segment.
inline std::vector<Curve> polyline_path(const std::vector<Point>& pts) {
  if (pts.size() < 2) throw BadParameters("a path needs at least two points");
  std::vector<Curve> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) out.push_back(straight_path(pts[i], pts[i + 1]));
  return out;
}

struct TransportOptions {
  int initial_steps = 16;
  int max_doublings = 12;
  double tolerance = 1e-9;
  double metric_drift = 1e-8;
};

struct TransportResult {
  Tractor value;
  int steps = 0;
  double metric_drift = 0.0;
  double step_change = 0.0;
};

namespace detail {

/// dU/dt = -X^a C_a(U), the connection written as a linear map on slot vectors.
inline Eigen::MatrixXd connection_matrix(const MetricField& g, std::span<const double> p,
                                         std::span<const double> vel) {
  const int d = g.dim();
  LocalGeometry lg = local_geometry(g, p, 0, GeometryLevel::ricci);
  const auto& P = require_schouten(lg);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d + 2, d + 2);
  for (int a = 0; a < d; ++a) {
    const double x = vel[static_cast<std::size_t>(a)];
    if (x == 0.0) continue;
    A(0, 1 + a) -= x;
    for (int b = 0; b < d; ++b) {
      for (int c = 0; c < d; ++c) A(1 + b, 1 + c) -= x * lg.gamma[lg.i3(c, a, b)].value();
      A(1 + b, d + 1) += x * lg.g[lg.i2(a, b)].value();
      A(1 + b, 0) += x * P[lg.i2(a, b)].value();
      for (int c = 0; c < d; ++c) {
        A(d + 1, 1 + c) -= x * P[lg.i2(a, b)].value() * lg.ginv[lg.i2(b, c)].value();
      }
    }
  }
  return -A;
}

inline Eigen::VectorXd rk4_transport(const MetricField& g, const Curve& c, Eigen::VectorXd u, int n) {
  const double h = 1.0 / n;
  auto f = [&](double t, const Eigen::VectorXd& y) {
    Point x = c.position(t);
    Point v = c.velocity(t);
    return Eigen::VectorXd(connection_matrix(g, x, v) * y);
  };
  for (int i = 0; i < n; ++i) {
    const double t = i * h;
    Eigen::VectorXd k1 = f(t, u);
    Eigen::VectorXd k2 = f(t + h / 2, u + h / 2 * k1);
    Eigen::VectorXd k3 = f(t + h / 2, u + h / 2 * k2);
    Eigen::VectorXd k4 = f(t + h, u + h * k3);
    u += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return u;
}

}  // namespace detail

/// Solve nabla_{gamma'} U = 0 from U0 at gamma(0); the step count doubles until
/// two successive solutions agree and h(U, U) is conserved.
inline TransportResult parallel_transport(const Tractor& u0, const Curve& curve, const TransportOptions& opt = {}) {
  const MetricField& g = u0.scale;
  Point start = curve.position(0.0);
  for (std::size_t i = 0; i < start.size(); ++i) {
    if (std::abs(start[i] - u0.point[i]) > 1e-12) throw BadParameters("initial tractor is not at the path start");
  }
  const double h0 = tractor_metric(u0, u0);
  Eigen::VectorXd y0 = u0.stacked();
  int n = std::max(1, opt.initial_steps);
  Eigen::VectorXd prev = detail::rk4_transport(g, curve, y0, n);
  Point end = curve.position(1.0);
  const int d = u0.dim();
  auto to_tractor = [&](const Eigen::VectorXd& y) {
    return make_tractor(g, end, u0.weight, y(0), y.segment(1, d), y(d + 1));
  };
  for (int k = 0; k < opt.max_doublings; ++k) {
    n *= 2;
    Eigen::VectorXd next = detail::rk4_transport(g, curve, y0, n);
    const double change = (next - prev).cwiseAbs().maxCoeff();
    Tractor t = to_tractor(next);
    const double drift = std::abs(tractor_metric(t, t) - h0);
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    if (change <= opt.tolerance * scale && drift <= opt.metric_drift) return TransportResult{t, n, drift, change};
    prev = std::move(next);
  }
  throw StepFailure("transport did not converge within " + std::to_string(n) + " steps");
}

/// Transport along consecutive pieces; each piece starts where the previous ended.
inline TransportResult parallel_transport(const Tractor& u0, const std::vector<Curve>& pieces,
                                          const TransportOptions& opt = {}) {
  if (pieces.empty()) throw BadParameters("empty path");
  TransportResult r{u0, 0, 0.0, 0.0};
  const double h0 = tractor_metric(u0, u0);
  for (const auto& c : pieces) {
    TransportResult s = parallel_transport(r.value, c, opt);
    s.steps += r.steps;
    s.step_change = std::max(s.step_change, r.step_change);
    r = std::move(s);
  }
  r.metric_drift = std::abs(tractor_metric(r.value, r.value) - h0);
  if (r.metric_drift > opt.metric_drift) throw StepFailure("tractor metric drifted along the path");
  return r;
}

}  // namespace tractorlab
