#pragma once

// Truncated multivariate Taylor polynomials ("jets").
//
// A Jet in n variables of order N stores the Taylor coefficients
// c_alpha = d^alpha f / alpha!  for every multi-index |alpha| <= N, densely,
// ordered by total degree. Monomials of degree <= M form a prefix of the
// order-N layout for any M <= N, so truncation is a prefix copy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tractorlab/error.hpp"

namespace tractorlab {

namespace detail {

class JetLayout {
 public:
  JetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
    degree_begin_.assign(static_cast<std::size_t>(order + 2), 0);
    std::vector<int> e(static_cast<std::size_t>(nvars), 0);
    for (int deg = 0; deg <= order; ++deg) {
      degree_begin_[static_cast<std::size_t>(deg)] = degrees_.size();
      enumerate(deg, 0, e);
    }
    degree_begin_[static_cast<std::size_t>(order + 1)] = degrees_.size();
    for (std::size_t m = 0; m < degrees_.size(); ++m) {
      index_.emplace(encode(exponents(m)), static_cast<std::uint32_t>(m));
    }
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  std::size_t size() const { return degrees_.size(); }
  int degree(std::size_t m) const { return degrees_[m]; }
  std::span<const std::uint8_t> exponents(std::size_t m) const {
    return {exps_.data() + m * static_cast<std::size_t>(nvars_), static_cast<std::size_t>(nvars_)};
  }
  /// Number of monomials of total degree <= deg.
  std::size_t prefix(int deg) const {
    if (deg < 0) return 0;
    if (deg > order_) deg = order_;
    return degree_begin_[static_cast<std::size_t>(deg + 1)];
  }

  /// Index of a multi-index, or -1 when its degree exceeds the order.
  long index_of(std::span<const int> alpha) const {
    std::uint64_t key = 0;
    int total = 0;
    for (int v = nvars_ - 1; v >= 0; --v) {
      int a = alpha[static_cast<std::size_t>(v)];
      if (a < 0) return -1;
      total += a;
      key = key * static_cast<std::uint64_t>(order_ + 1) + static_cast<std::uint64_t>(a);
    }
    if (total > order_) return -1;
    auto it = index_.find(key);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
  }

  struct MulTable {
    std::vector<std::uint32_t> begin;                               // per left monomial
    std::vector<std::pair<std::uint32_t, std::uint32_t>> right_out;  // (right index, product index)
  };

  const MulTable& mul_table() const {
    std::call_once(mul_once_, [this] { build_mul(); });
    return mul_;
  }

  struct DerivTable {
    std::vector<std::uint32_t> source;  // index in this layout
    std::vector<double> factor;
  };

  /// Table mapping the order-(N-1) monomials of d/dx_v onto this layout.
  const DerivTable& deriv_table(int v) const {
    std::call_once(deriv_once_, [this] { build_deriv(); });
    return deriv_[static_cast<std::size_t>(v)];
  }

 private:
  std::uint64_t encode(std::span<const std::uint8_t> e) const {
    std::uint64_t key = 0;
    for (int v = nvars_ - 1; v >= 0; --v) {
      key = key * static_cast<std::uint64_t>(order_ + 1) + e[static_cast<std::size_t>(v)];
    }
    return key;
  }

  void enumerate(int remaining, int var, std::vector<int>& e) {
    if (var == nvars_ - 1) {
      e[static_cast<std::size_t>(var)] = remaining;
      int total = 0;
      for (int x : e) {
        exps_.push_back(static_cast<std::uint8_t>(x));
        total += x;
      }
      degrees_.push_back(total);
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      e[static_cast<std::size_t>(var)] = a;
      enumerate(remaining - a, var + 1, e);
    }
  }

  void build_mul() const {
    std::vector<int> sum(static_cast<std::size_t>(nvars_));
    mul_.begin.reserve(size() + 1);
    for (std::size_t i = 0; i < size(); ++i) {
      mul_.begin.push_back(static_cast<std::uint32_t>(mul_.right_out.size()));
      auto ei = exponents(i);
      std::size_t jmax = prefix(order_ - degrees_[i]);
      for (std::size_t j = 0; j < jmax; ++j) {
        auto ej = exponents(j);
        for (std::size_t v = 0; v < sum.size(); ++v) sum[v] = ei[v] + ej[v];
        long k = index_of(sum);
        mul_.right_out.emplace_back(static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k));
      }
    }
    mul_.begin.push_back(static_cast<std::uint32_t>(mul_.right_out.size()));
  }

  void build_deriv() const {
    deriv_.resize(static_cast<std::size_t>(nvars_));
    std::size_t lower = prefix(order_ - 1);
    std::vector<int> a(static_cast<std::size_t>(nvars_));
    for (int v = 0; v < nvars_; ++v) {
      auto& t = deriv_[static_cast<std::size_t>(v)];
      for (std::size_t m = 0; m < lower; ++m) {
        auto e = exponents(m);
        for (std::size_t w = 0; w < a.size(); ++w) a[w] = e[w];
        a[static_cast<std::size_t>(v)] += 1;
        t.source.push_back(static_cast<std::uint32_t>(index_of(a)));
        t.factor.push_back(static_cast<double>(a[static_cast<std::size_t>(v)]));
      }
    }
  }

  int nvars_;
  int order_;
  std::vector<std::uint8_t> exps_;
  std::vector<int> degrees_;
  std::vector<std::size_t> degree_begin_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  mutable std::once_flag mul_once_;
  mutable MulTable mul_;
  mutable std::once_flag deriv_once_;
  mutable std::vector<DerivTable> deriv_;
};

inline const JetLayout& jet_layout(int nvars, int order) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> registry;
  if (nvars < 1 || order < 0 || nvars > 16 || order > 64) {
    throw ShapeMismatch("unsupported jet shape (nvars=" + std::to_string(nvars) +
                        ", order=" + std::to_string(order) + ")");
  }
  std::lock_guard lock(mutex);
  auto& slot = registry[{nvars, order}];
  if (!slot) slot = std::make_unique<JetLayout>(nvars, order);
  return *slot;
}

}  // namespace detail

class Jet {
 public:
  Jet() : Jet(1, 0) {}
  Jet(int nvars, int order) : layout_(&detail::jet_layout(nvars, order)), c_(layout_->size(), 0.0) {}

  static Jet constant(int nvars, int order, double value) {
    Jet j(nvars, order);
    j.c_[0] = value;
    return j;
  }

  /// The coordinate function x_var expanded at a point where it equals `value`.
  static Jet variable(int nvars, int order, int var, double value) {
    Jet j = constant(nvars, order, value);
    if (var < 0 || var >= nvars) throw ShapeMismatch("variable index out of range");
    if (order >= 1) j.c_[1 + static_cast<std::size_t>(var)] = 1.0;
    return j;
  }

  int nvars() const { return layout_->nvars(); }
  int order() const { return layout_->order(); }
  std::size_t size() const { return c_.size(); }
  double value() const { return c_[0]; }
  std::span<const double> coeffs() const { return c_; }
  std::span<double> coeffs_mut() { return c_; }
  const detail::JetLayout& layout() const { return *layout_; }

  /// Taylor coefficient of the monomial x^alpha; 0 above the stored order
  /// is not assumed, so asking for it throws.
  double coeff(std::span<const int> alpha) const {
    check_multi(alpha);
    return c_[static_cast<std::size_t>(layout_->index_of(alpha))];
  }

  /// Mixed partial derivative d^alpha f at the expansion point.
  double partial(std::span<const int> alpha) const {
    double f = coeff(alpha);
    for (int a : alpha) {
      for (int k = 2; k <= a; ++k) f *= k;
    }
    return f;
  }

  double partial(std::initializer_list<int> alpha) const {
    std::vector<int> a(alpha);
    return partial(std::span<const int>(a));
  }

  bool same_shape(const Jet& o) const { return layout_ == o.layout_; }

  Jet truncated(int order) const {
    if (order > this->order()) {
      throw OrderExceeded("cannot raise jet order from " + std::to_string(this->order()) + " to " +
                          std::to_string(order));
    }
    if (order == this->order()) return *this;
    Jet r(nvars(), order);
    std::copy_n(c_.begin(), r.c_.size(), r.c_.begin());
    return r;
  }

  /// d/dx_var; the result has order one lower.
  Jet derivative(int var) const {
    if (order() == 0) throw OrderExceeded("cannot differentiate an order-0 jet");
    if (var < 0 || var >= nvars()) throw ShapeMismatch("variable index out of range");
    const auto& t = layout_->deriv_table(var);
    Jet r(nvars(), order() - 1);
    for (std::size_t m = 0; m < r.c_.size(); ++m) r.c_[m] = t.factor[m] * c_[t.source[m]];
    return r;
  }

  /// True when every coefficient above degree 0 vanishes.
  bool is_constant() const {
    for (std::size_t m = 1; m < c_.size(); ++m) {
      if (c_[m] != 0.0) return false;
    }
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : c_) m = std::max(m, std::abs(x));
    return m;
  }

  Jet& operator+=(const Jet& o) {
    check_shape(o);
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] += o.c_[m];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check_shape(o);
    for (std::size_t m = 0; m < c_.size(); ++m) c_[m] -= o.c_[m];
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (double& x : c_) x /= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }

  friend Jet operator-(Jet a) {
    for (double& x : a.c_) x = -x;
    return a;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, Jet a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_shape(b);
    Jet r(a.nvars(), a.order());
    const auto& t = a.layout_->mul_table();
    const double* bc = b.c_.data();
    double* rc = r.c_.data();
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      const double ai = a.c_[i];
      if (ai == 0.0) continue;
      for (std::uint32_t q = t.begin[i]; q < t.begin[i + 1]; ++q) {
        const auto [j, k] = t.right_out[q];
        rc[k] += ai * bc[j];
      }
    }
    return r;
  }

 private:
  void check_shape(const Jet& o) const {
    if (layout_ != o.layout_) {
      throw ShapeMismatch("jet shapes differ: (" + std::to_string(nvars()) + "," + std::to_string(order()) +
                          ") vs (" + std::to_string(o.nvars()) + "," + std::to_string(o.order()) + ")");
    }
  }
  void check_multi(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != nvars()) throw ShapeMismatch("multi-index length differs from nvars");
    int total = 0;
    for (int a : alpha) {
      if (a < 0) throw ShapeMismatch("negative multi-index entry");
      total += a;
    }
    if (total > order()) {
      throw OrderExceeded("multi-index degree " + std::to_string(total) + " exceeds jet order " +
                          std::to_string(order()));
    }
  }

  const detail::JetLayout* layout_;
  std::vector<double> c_;
};

/// f(a) for a univariate f given by its Taylor coefficients at a.value():
/// sum_j coeffs[j] (a - a0)^j, truncated.
inline Jet compose_series(std::span<const double> coeffs, const Jet& a) {
  Jet shifted = a;
  shifted.coeffs_mut()[0] = 0.0;
  int top = std::min<int>(a.order(), static_cast<int>(coeffs.size()) - 1);
  Jet r = Jet::constant(a.nvars(), a.order(), coeffs[static_cast<std::size_t>(top)]);
  for (int j = top - 1; j >= 0; --j) {
    r = r * shifted;
    r += coeffs[static_cast<std::size_t>(j)];
  }
  return r;
}

namespace series {

inline std::vector<double> exp(double a0, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  double e = std::exp(a0);
  double f = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) f *= j;
    c[static_cast<std::size_t>(j)] = e / f;
  }
  return c;
}

inline std::vector<double> log(double a0, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  c[0] = std::log(a0);
  double p = 1.0;
  for (int j = 1; j <= n; ++j) {
    p /= a0;
    c[static_cast<std::size_t>(j)] = ((j % 2 == 1) ? 1.0 : -1.0) * p / j;
  }
  return c;
}

/// (a0 + s)^p as a series in s, requires a0 > 0 unless p is a non-negative integer.
inline std::vector<double> power(double a0, double p, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  double base = std::pow(a0, p);
  double binom = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) binom *= (p - (j - 1)) / j;
    c[static_cast<std::size_t>(j)] = base * binom * std::pow(a0, -j);
  }
  return c;
}

inline std::vector<double> reciprocal(double a0, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  double p = 1.0 / a0;
  for (int j = 0; j <= n; ++j) {
    c[static_cast<std::size_t>(j)] = p;
    p *= -1.0 / a0;
  }
  return c;
}

inline std::vector<double> sin(double a0, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  double s = std::sin(a0), co = std::cos(a0), f = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) f *= j;
    double d = (j % 4 == 0) ? s : (j % 4 == 1) ? co : (j % 4 == 2) ? -s : -co;
    c[static_cast<std::size_t>(j)] = d / f;
  }
  return c;
}

inline std::vector<double> cos(double a0, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1));
  double s = std::sin(a0), co = std::cos(a0), f = 1.0;
  for (int j = 0; j <= n; ++j) {
    if (j > 0) f *= j;
    double d = (j % 4 == 0) ? co : (j % 4 == 1) ? -s : (j % 4 == 2) ? -co : s;
    c[static_cast<std::size_t>(j)] = d / f;
  }
  return c;
}

/// atan(a0 + s): integrate the series of 1/(1 + (a0 + s)^2).
inline std::vector<double> atan(double a0, int n) {
  std::vector<double> c(static_cast<std::size_t>(n + 1), 0.0);
  c[0] = std::atan(a0);
  if (n == 0) return c;
  // q(s) = 1/(1 + a0^2 + 2 a0 s + s^2) by the recursion q * den = 1.
  std::vector<double> den = {1.0 + a0 * a0, 2.0 * a0, 1.0};
  std::vector<double> q(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = (j == 0) ? 1.0 : 0.0;
    for (int i = 1; i <= 2 && i <= j; ++i) acc -= den[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(j - i)];
    q[static_cast<std::size_t>(j)] = acc / den[0];
  }
  for (int j = 1; j <= n; ++j) c[static_cast<std::size_t>(j)] = q[static_cast<std::size_t>(j - 1)] / j;
  return c;
}

}  // namespace series

inline Jet reciprocal(const Jet& a) {
  if (a.value() == 0.0) throw DomainError("division by a jet with zero value");
  return compose_series(series::reciprocal(a.value(), a.order()), a);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(double s, const Jet& b) { return reciprocal(b) * s; }

inline Jet exp(const Jet& a) { return compose_series(series::exp(a.value(), a.order()), a); }

inline Jet log(const Jet& a) {
  if (!(a.value() > 0.0)) throw DomainError("log of non-positive value " + std::to_string(a.value()));
  return compose_series(series::log(a.value(), a.order()), a);
}

inline Jet sqrt(const Jet& a) {
  if (a.value() < 0.0 || std::isnan(a.value())) {
    throw DomainError("sqrt of negative value " + std::to_string(a.value()));
  }
  if (a.value() == 0.0) {
    if (a.order() == 0) return a;
    throw DomainError("sqrt is not differentiable at 0");
  }
  return compose_series(series::power(a.value(), 0.5, a.order()), a);
}

inline Jet sin(const Jet& a) { return compose_series(series::sin(a.value(), a.order()), a); }
inline Jet cos(const Jet& a) { return compose_series(series::cos(a.value(), a.order()), a); }
inline Jet atan(const Jet& a) { return compose_series(series::atan(a.value(), a.order()), a); }

inline Jet integer_power(const Jet& a, long n) {
  if (n < 0) return reciprocal(integer_power(a, -n));
  Jet r = Jet::constant(a.nvars(), a.order(), 1.0);
  Jet base = a;
  while (n > 0) {
    if (n & 1) r = r * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return r;
}

inline Jet pow(const Jet& a, double p) {
  double ip;
  bool integral = std::modf(p, &ip) == 0.0 && std::abs(p) < 64;
  if (integral) {
    if (p < 0 && a.value() == 0.0) throw DomainError("negative power of zero");
    return integer_power(a, static_cast<long>(ip));
  }
  if (a.value() < 0.0) throw DomainError("non-integer power of negative value");
  if (a.value() == 0.0) {
    if (p > 0 && a.order() == 0) return a;
    throw DomainError("non-integer power is not differentiable at 0");
  }
  return compose_series(series::power(a.value(), p, a.order()), a);
}

inline Jet pow(const Jet& a, const Jet& b) {
  if (b.is_constant()) return pow(a, b.value());
  return exp(b * log(a));
}

/// Evaluate the Taylor polynomial stored in `j` (expanded about the point
/// whose coordinates are the values of `seeds`) on seed jets, i.e. form the
/// composite j(seeds). Exact to the seeds' order when j.order() >= it.
inline Jet compose(const Jet& j, std::span<const Jet> seeds) {
  if (static_cast<int>(seeds.size()) != j.nvars()) throw ShapeMismatch("compose: seed count differs from nvars");
  const int m = seeds[0].nvars();
  const int order = seeds[0].order();
  for (const Jet& s : seeds) {
    if (s.nvars() != m || s.order() != order) throw ShapeMismatch("compose: seeds of mixed shape");
  }
  const int top = std::min(order, j.order());
  std::vector<std::vector<Jet>> powers(seeds.size());
  for (std::size_t v = 0; v < seeds.size(); ++v) {
    Jet d = seeds[v];
    d.coeffs_mut()[0] = 0.0;
    powers[v].push_back(Jet::constant(m, order, 1.0));
    for (int e = 1; e <= top; ++e) powers[v].push_back(powers[v].back() * d);
  }
  Jet r(m, order);
  const auto& lay = j.layout();
  for (std::size_t idx = 0; idx < lay.prefix(top); ++idx) {
    double c = j.coeffs()[idx];
    if (c == 0.0) continue;
    auto e = lay.exponents(idx);
    Jet term = Jet::constant(m, order, c);
    bool first = true;
    for (std::size_t v = 0; v < seeds.size(); ++v) {
      if (e[v] == 0) continue;
      if (first) {
        term = powers[v][e[v]] * c;
        first = false;
      } else {
        term = term * powers[v][e[v]];
      }
    }
    r += term;
  }
  return r;
}

/// Restriction of a jet to the line t -> p + t * direction, as a 1-variable jet.
inline Jet restrict_to_line(const Jet& j, std::span<const double> direction) {
  if (static_cast<int>(direction.size()) != j.nvars()) throw ShapeMismatch("direction length differs from nvars");
  Jet r(1, j.order());
  const auto& lay = j.layout();
  auto rc = r.coeffs_mut();
  for (std::size_t idx = 0; idx < lay.size(); ++idx) {
    auto e = lay.exponents(idx);
    double f = j.coeffs()[idx];
    for (std::size_t v = 0; v < e.size(); ++v) {
      for (int k = 0; k < e[v]; ++k) f *= direction[v];
    }
    rc[static_cast<std::size_t>(lay.degree(idx))] += f;
  }
  return r;
}

/// Identity seeds x_i = p_i + y_i at `point`.
inline std::vector<Jet> seed_point(std::span<const double> point, int order) {
  std::vector<Jet> s;
  s.reserve(point.size());
  const int n = static_cast<int>(point.size());
  for (int i = 0; i < n; ++i) s.push_back(Jet::variable(n, order, i, point[static_cast<std::size_t>(i)]));
  return s;
}

/// True when `seeds` are exactly the identity seeds at their values.
inline bool is_identity_seeding(std::span<const Jet> seeds) {
  const int n = static_cast<int>(seeds.size());
  for (int i = 0; i < n; ++i) {
    const Jet& s = seeds[static_cast<std::size_t>(i)];
    if (s.nvars() != n) return false;
    auto c = s.coeffs();
    for (std::size_t m = 1; m < c.size(); ++m) {
      double expected = (m == static_cast<std::size_t>(1 + i)) ? 1.0 : 0.0;
      if (c[m] != expected) return false;
    }
  }
  return true;
}

}  // namespace tractorlab
