#pragma once

// Chart-coordinate fields. A ScalarField is a function on seed jets, so it
// composes with any change of variables (pullbacks, rays, embeddings). Fields
// that need derivatives are built with ScalarField::local, which computes a
// jet at the base point and re-expands it along non-identity seeds.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tractorlab/error.hpp"
#include "tractorlab/expr.hpp"
#include "tractorlab/jet.hpp"

namespace tractorlab {

using Point = std::vector<double>;

/// Coordinate chart: names, optional domain predicate (expr > 0), optional
/// period per coordinate and a sampling box.
struct Chart {
  std::vector<std::string> coords;
  std::optional<Expr> domain;
  Params domain_params;
  std::vector<std::optional<double>> periods;
  std::vector<std::pair<double, double>> ranges;

  Chart() = default;
  explicit Chart(std::vector<std::string> names) : coords(std::move(names)) {
    for (std::size_t i = 0; i < coords.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (coords[i] == coords[j]) throw BadParameters("duplicate coordinate name '" + coords[i] + "'");
      }
    }
    periods.resize(coords.size());
    ranges.assign(coords.size(), {-1.0, 1.0});
  }

  int dim() const { return static_cast<int>(coords.size()); }

  bool contains(std::span<const double> p) const {
    if (!domain) return true;
    CompiledExpr c(*domain, coords, domain_params);
    return c(p) > 0.0;
  }
};

class ScalarField {
 public:
  using Fn = std::function<Jet(std::span<const Jet>)>;
  using LocalFn = std::function<Jet(std::span<const double>, int)>;

  ScalarField() = default;
  ScalarField(int dim, Fn fn) : dim_(dim), fn_(std::make_shared<Fn>(std::move(fn))) {}

  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(fn_); }

  Jet operator()(std::span<const Jet> x) const {
    if (static_cast<int>(x.size()) != dim_) {
      throw ShapeMismatch("field of dimension " + std::to_string(dim_) + " evaluated on " +
                          std::to_string(x.size()) + " coordinates");
    }
    return (*fn_)(x);
  }

  Jet at(std::span<const double> p, int order) const {
    auto seeds = seed_point(p, order);
    return (*this)(seeds);
  }

  double value(std::span<const double> p) const { return at(p, 0).value(); }

  static ScalarField constant(int dim, double v) {
    return {dim, [v](std::span<const Jet> x) { return Jet::constant(x[0].nvars(), x[0].order(), v); }};
  }

  static ScalarField coordinate(int dim, int i) {
    return {dim, [i](std::span<const Jet> x) { return x[static_cast<std::size_t>(i)]; }};
  }

  static ScalarField from_expr(const Expr& e, std::span<const std::string> coords, const Params& params = {}) {
    auto c = std::make_shared<CompiledExpr>(e, coords, params);
    return {static_cast<int>(coords.size()), [c](std::span<const Jet> x) { return (*c)(x); }};
  }

  static ScalarField from_text(std::string_view text, std::span<const std::string> coords,
                               const Params& params = {}) {
    return from_expr(parse(text), coords, params);
  }

  /// Wrap a point-wise jet computation (which may differentiate its inputs).
  static ScalarField local(int dim, LocalFn fn) {
    return {dim, [dim, fn = std::move(fn)](std::span<const Jet> x) {
              Point p(x.size());
              for (std::size_t i = 0; i < x.size(); ++i) p[i] = x[i].value();
              const int order = x[0].order();
              if (is_identity_seeding(x)) return fn(p, order);
              Jet j = fn(p, order);
              return compose(j, x);
            }};
  }

  /// this o map, where map[i] gives coordinate i of this field's chart.
  ScalarField pullback(const std::vector<ScalarField>& map) const {
    if (static_cast<int>(map.size()) != dim_) throw ShapeMismatch("pullback map has wrong number of components");
    const int inner = map.empty() ? 0 : map[0].dim();
    auto self = *this;
    return {inner, [self, map](std::span<const Jet> x) {
              std::vector<Jet> y;
              y.reserve(map.size());
              for (const auto& m : map) y.push_back(m(x));
              return self(y);
            }};
  }

  template <class F>
  ScalarField map(F f) const {
    auto self = *this;
    return {dim_, [self, f](std::span<const Jet> x) { return f(self(x)); }};
  }

  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) { return combine(a, b, std::plus<>{}); }
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b) { return combine(a, b, std::minus<>{}); }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return combine(a, b, std::multiplies<>{});
  }
  friend ScalarField operator/(const ScalarField& a, const ScalarField& b) { return combine(a, b, std::divides<>{}); }
  friend ScalarField operator*(const ScalarField& a, double s) {
    return a.map([s](Jet j) { return j * s; });
  }
  friend ScalarField operator*(double s, const ScalarField& a) { return a * s; }
  friend ScalarField operator+(const ScalarField& a, double s) {
    return a.map([s](Jet j) { return j + s; });
  }
  friend ScalarField operator+(double s, const ScalarField& a) { return a + s; }
  friend ScalarField operator-(const ScalarField& a, double s) { return a + (-s); }
  friend ScalarField operator-(double s, const ScalarField& a) { return (-a) + s; }
  friend ScalarField operator/(const ScalarField& a, double s) { return a * (1.0 / s); }
  friend ScalarField operator/(double s, const ScalarField& a) {
    return a.map([s](Jet j) { return s / j; });
  }
  friend ScalarField operator-(const ScalarField& a) {
    return a.map([](Jet j) { return -j; });
  }

 private:
  template <class Op>
  static ScalarField combine(const ScalarField& a, const ScalarField& b, Op op) {
    if (a.dim_ != b.dim_) throw ShapeMismatch("combining fields of different dimension");
    return {a.dim_, [a, b, op](std::span<const Jet> x) { return op(a(x), b(x)); }};
  }

  int dim_ = 0;
  std::shared_ptr<const Fn> fn_;
};

inline ScalarField pow(const ScalarField& f, double p) {
  return f.map([p](const Jet& j) { return pow(j, p); });
}
inline ScalarField exp(const ScalarField& f) {
  return f.map([](const Jet& j) { return exp(j); });
}
inline ScalarField log(const ScalarField& f) {
  return f.map([](const Jet& j) { return log(j); });
}
inline ScalarField sqrt(const ScalarField& f) {
  return f.map([](const Jet& j) { return sqrt(j); });
}

enum class Signature { riemannian, lorentzian };

class MetricField;

namespace detail {

struct MetricNode {
  Chart chart;
  std::vector<ScalarField> components;  // full d*d, symmetric
  Signature signature = Signature::riemannian;
  std::shared_ptr<const MetricNode> root;  // null for roots
  std::optional<ScalarField> factor;       // this = factor^2 * root
  std::string label;
};

}  // namespace detail

/// Symmetric 2-tensor field on a chart. Metrics obtained from one another by
/// rescaling share a root, which lets densities and tractors relate frames.
class MetricField {
 public:
  MetricField() = default;

  MetricField(Chart chart, std::vector<ScalarField> components, Signature sig = Signature::riemannian,
              std::string label = {}) {
    const std::size_t d = chart.coords.size();
    if (components.size() == d * (d + 1) / 2 && d > 1) {
      // Upper triangle row by row.
      std::vector<ScalarField> full(d * d);
      std::size_t k = 0;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
          full[a * d + b] = components[k];
          full[b * d + a] = components[k];
          ++k;
        }
      }
      components = std::move(full);
    }
    if (components.size() != d * d) throw ShapeMismatch("metric needs d*d or d(d+1)/2 components");
    for (const auto& c : components) {
      if (c.dim() != static_cast<int>(d)) throw ShapeMismatch("metric component on a different chart");
    }
    auto node = std::make_shared<detail::MetricNode>();
    node->chart = std::move(chart);
    node->components = std::move(components);
    node->signature = sig;
    node->label = std::move(label);
    node_ = std::move(node);
  }

  static MetricField diagonal(Chart chart, std::vector<ScalarField> diag, Signature sig = Signature::riemannian,
                              std::string label = {}) {
    const int d = chart.dim();
    std::vector<ScalarField> full(static_cast<std::size_t>(d * d), ScalarField::constant(d, 0.0));
    for (int a = 0; a < d; ++a) full[static_cast<std::size_t>(a * d + a)] = diag[static_cast<std::size_t>(a)];
    return MetricField(std::move(chart), std::move(full), sig, std::move(label));
  }

  static MetricField flat(Chart chart, std::string label = "flat") {
    const int d = chart.dim();
    std::vector<ScalarField> diag(static_cast<std::size_t>(d), ScalarField::constant(d, 1.0));
    return diagonal(std::move(chart), std::move(diag), Signature::riemannian, std::move(label));
  }

  bool valid() const { return static_cast<bool>(node_); }
  int dim() const { return node_->chart.dim(); }
  const Chart& chart() const { return node_->chart; }
  Signature signature() const { return node_->signature; }
  const std::string& label() const { return node_->label; }
  const ScalarField& component(int a, int b) const {
    return node_->components[static_cast<std::size_t>(a * dim() + b)];
  }

  /// Omega^2 * this. Omega must be positive wherever it is evaluated.
  MetricField rescaled(const ScalarField& omega) const {
    if (omega.dim() != dim()) throw ShapeMismatch("conformal factor on a different chart");
    auto node = std::make_shared<detail::MetricNode>(*node_);
    auto checked = omega.map([](const Jet& j) {
      if (!(j.value() > 0.0)) throw NonpositiveFactor("conformal factor value " + std::to_string(j.value()));
      return j;
    });
    auto sq = checked * checked;
    for (auto& c : node->components) c = sq * c;
    node->root = node_->root ? node_->root : node_;
    node->factor = node_->factor ? (*node_->factor * checked) : checked;
    node->label = node_->label + "*rescaled";
    MetricField m;
    m.node_ = std::move(node);
    return m;
  }

  /// Omega with other = Omega^2 * this, when both descend from one root.
  std::optional<ScalarField> factor_to(const MetricField& other) const {
    if (node_ == other.node_) return ScalarField::constant(dim(), 1.0);
    auto my_root = node_->root ? node_->root : node_;
    auto other_root = other.node_->root ? other.node_->root : other.node_;
    if (my_root != other_root) return std::nullopt;
    ScalarField mine = node_->factor ? *node_->factor : ScalarField::constant(dim(), 1.0);
    ScalarField theirs = other.node_->factor ? *other.node_->factor : ScalarField::constant(dim(), 1.0);
    return theirs / mine;
  }

  bool same_as(const MetricField& other) const { return node_ == other.node_; }

 private:
  std::shared_ptr<const detail::MetricNode> node_;
};

}  // namespace tractorlab
