#pragma once

// Expression language for coordinate formulas: literals, `pi`, variables,
// unary minus, + - * / ^ and the functions sin cos exp log sqrt atan.
// Precedence: ^ (right-assoc) > unary minus > * / > + -.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tractorlab/error.hpp"
#include "tractorlab/jet.hpp"

namespace tractorlab {

enum class ExprKind { literal, pi, variable, negate, add, sub, mul, div, pow, call };
enum class Func { sin, cos, exp, log, sqrt, atan };

inline constexpr std::array<std::pair<std::string_view, Func>, 6> kFunctions{{
    {"sin", Func::sin},
    {"cos", Func::cos},
    {"exp", Func::exp},
    {"log", Func::log},
    {"sqrt", Func::sqrt},
    {"atan", Func::atan},
}};

inline std::string_view func_name(Func f) {
  for (auto [name, fn] : kFunctions) {
    if (fn == f) return name;
  }
  return "?";
}

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

/// Immutable AST node. Literals are always non-negative: a leading minus
/// is a separate `negate` node.
struct ExprNode {
  ExprKind kind;
  double value = 0.0;
  std::string name;
  Func func = Func::sin;
  std::size_t position = 0;
  Expr lhs;
  Expr rhs;
};

namespace expr {

inline Expr literal(double v, std::size_t pos = 0) {
  return std::make_shared<ExprNode>(ExprNode{ExprKind::literal, v, {}, Func::sin, pos, nullptr, nullptr});
}
inline Expr pi(std::size_t pos = 0) {
  return std::make_shared<ExprNode>(ExprNode{ExprKind::pi, 0.0, {}, Func::sin, pos, nullptr, nullptr});
}
inline Expr variable(std::string name, std::size_t pos = 0) {
  return std::make_shared<ExprNode>(ExprNode{ExprKind::variable, 0.0, std::move(name), Func::sin, pos, nullptr, nullptr});
}
inline Expr unary(ExprKind k, Expr a, std::size_t pos = 0) {
  return std::make_shared<ExprNode>(ExprNode{k, 0.0, {}, Func::sin, pos, std::move(a), nullptr});
}
inline Expr call(Func f, Expr a, std::size_t pos = 0) {
  return std::make_shared<ExprNode>(ExprNode{ExprKind::call, 0.0, {}, f, pos, std::move(a), nullptr});
}
inline Expr binary(ExprKind k, Expr a, Expr b, std::size_t pos = 0) {
  return std::make_shared<ExprNode>(ExprNode{k, 0.0, {}, Func::sin, pos, std::move(a), std::move(b)});
}

}  // namespace expr

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse() {
    skip();
    if (at_end()) throw SyntaxError(pos_, "empty expression");
    Expr e = additive();
    skip();
    if (!at_end()) throw SyntaxError(pos_, std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  void skip() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (!at_end() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static bool ident_start(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || u >= 0x80;
  }
  static bool ident_char(char c) {
    return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
  }

  Expr additive() {
    Expr lhs = multiplicative();
    for (;;) {
      skip();
      std::size_t p = pos_;
      if (accept('+')) {
        lhs = expr::binary(ExprKind::add, lhs, multiplicative(), p);
      } else if (accept('-')) {
        lhs = expr::binary(ExprKind::sub, lhs, multiplicative(), p);
      } else {
        return lhs;
      }
    }
  }

  Expr multiplicative() {
    Expr lhs = unary();
    for (;;) {
      skip();
      std::size_t p = pos_;
      if (accept('*')) {
        lhs = expr::binary(ExprKind::mul, lhs, unary(), p);
      } else if (accept('/')) {
        lhs = expr::binary(ExprKind::div, lhs, unary(), p);
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    skip();
    std::size_t p = pos_;
    if (accept('-')) return expr::unary(ExprKind::negate, unary(), p);
    if (accept('+')) return unary();
    return power();
  }

  // The exponent may itself carry a sign: 2^-x.
  Expr power() {
    Expr base = primary();
    skip();
    std::size_t p = pos_;
    if (accept('^')) {
      skip();
      std::size_t q = pos_;
      Expr exponent = accept('-') ? expr::unary(ExprKind::negate, exponent_operand(), q) : exponent_operand();
      return expr::binary(ExprKind::pow, base, exponent, p);
    }
    return base;
  }
  Expr exponent_operand() {
    skip();
    std::size_t q = pos_;
    if (accept('-')) return expr::unary(ExprKind::negate, exponent_operand(), q);
    if (accept('+')) return exponent_operand();
    return power();
  }

  Expr primary() {
    skip();
    if (at_end()) throw SyntaxError(pos_, "unexpected end of input");
    std::size_t start = pos_;
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = additive();
      if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (ident_start(c)) {
      while (!at_end() && ident_char(s_[pos_])) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      skip();
      if (!at_end() && s_[pos_] == '(') {
        ++pos_;
        std::optional<Func> f;
        for (auto [fname, fn] : kFunctions) {
          if (fname == name) f = fn;
        }
        if (!f) throw UnknownFunction("'" + name + "' at " + std::to_string(start));
        Expr arg = additive();
        if (!accept(')')) throw SyntaxError(pos_, "expected ')' after argument of " + name);
        return expr::call(*f, arg, start);
      }
      if (name == "pi") return expr::pi(start);
      return expr::variable(name, start);
    }
    throw SyntaxError(pos_, std::string("unexpected '") + c + "'");
  }

  Expr number() {
    std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (!at_end() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (!at_end() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double v = 0.0;
    auto text = s_.substr(start, pos_ - start);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw SyntaxError(start, "malformed number");
    return expr::literal(v, start);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view text) { return detail::Parser(text).parse(); }

/// Fully parenthesized rendering; parse(print(e)) is structurally equal to e.
inline std::string print(const Expr& e) {
  switch (e->kind) {
    case ExprKind::literal: {
      std::array<char, 64> buf{};
      auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), e->value);
      return std::string(buf.data(), ptr);
    }
    case ExprKind::pi: return "pi";
    case ExprKind::variable: return e->name;
    case ExprKind::negate: return "(-" + print(e->lhs) + ")";
    case ExprKind::call: return std::string(func_name(e->func)) + "(" + print(e->lhs) + ")";
    case ExprKind::add: return "(" + print(e->lhs) + " + " + print(e->rhs) + ")";
    case ExprKind::sub: return "(" + print(e->lhs) + " - " + print(e->rhs) + ")";
    case ExprKind::mul: return "(" + print(e->lhs) + " * " + print(e->rhs) + ")";
    case ExprKind::div: return "(" + print(e->lhs) + " / " + print(e->rhs) + ")";
    case ExprKind::pow: return "(" + print(e->lhs) + " ^ " + print(e->rhs) + ")";
  }
  return "?";
}

/// Structural equality, ignoring source positions.
inline bool structurally_equal(const Expr& a, const Expr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::literal: return a->value == b->value;
    case ExprKind::pi: return true;
    case ExprKind::variable: return a->name == b->name;
    case ExprKind::negate: return structurally_equal(a->lhs, b->lhs);
    case ExprKind::call: return a->func == b->func && structurally_equal(a->lhs, b->lhs);
    default: return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
  }
}

/// Variable names referenced by the expression, sorted and unique.
inline std::vector<std::string> free_variables(const Expr& e) {
  std::vector<std::string> out;
  auto walk = [&](auto&& self, const Expr& n) -> void {
    if (!n) return;
    if (n->kind == ExprKind::variable) out.push_back(n->name);
    self(self, n->lhs);
    self(self, n->rhs);
  };
  walk(walk, e);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

using Params = std::map<std::string, double, std::less<>>;

/// An expression with its variables resolved against a coordinate list and
/// a parameter table; evaluates on any seed jets.
class CompiledExpr {
 public:
  CompiledExpr(Expr e, std::span<const std::string> coords, const Params& params) : root_(std::move(e)) {
    bind(root_, coords, params);
  }

  Jet operator()(std::span<const Jet> x) const {
    if (x.empty()) throw ShapeMismatch("expression evaluated without coordinates");
    return eval(root_, x);
  }

  double operator()(std::span<const double> p) const {
    auto seeds = seed_point(p, 0);
    return eval(root_, seeds).value();
  }

  const Expr& ast() const { return root_; }

 private:
  struct Binding {
    int coord = -1;
    double value = 0.0;
  };

  void bind(const Expr& n, std::span<const std::string> coords, const Params& params) {
    if (!n) return;
    if (n->kind == ExprKind::variable && !bindings_.count(n.get())) {
      Binding b;
      for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i] == n->name) b.coord = static_cast<int>(i);
      }
      if (b.coord < 0) {
        auto it = params.find(n->name);
        if (it == params.end()) {
          throw UnboundVariable("'" + n->name + "' at " + std::to_string(n->position));
        }
        b.value = it->second;
      }
      bindings_.emplace(n.get(), b);
    }
    bind(n->lhs, coords, params);
    bind(n->rhs, coords, params);
  }

  Jet eval(const Expr& n, std::span<const Jet> x) const {
    const int nv = x[0].nvars();
    const int ord = x[0].order();
    switch (n->kind) {
      case ExprKind::literal: return Jet::constant(nv, ord, n->value);
      case ExprKind::pi: return Jet::constant(nv, ord, std::numbers::pi);
      case ExprKind::variable: {
        const Binding& b = bindings_.at(n.get());
        if (b.coord >= 0) return x[static_cast<std::size_t>(b.coord)];
        return Jet::constant(nv, ord, b.value);
      }
      case ExprKind::negate: return -eval(n->lhs, x);
      case ExprKind::add: return eval(n->lhs, x) + eval(n->rhs, x);
      case ExprKind::sub: return eval(n->lhs, x) - eval(n->rhs, x);
      case ExprKind::mul: return eval(n->lhs, x) * eval(n->rhs, x);
      case ExprKind::div: return eval(n->lhs, x) / eval(n->rhs, x);
      case ExprKind::pow: return pow(eval(n->lhs, x), eval(n->rhs, x));
      case ExprKind::call: {
        Jet a = eval(n->lhs, x);
        switch (n->func) {
          case Func::sin: return sin(a);
          case Func::cos: return cos(a);
          case Func::exp: return exp(a);
          case Func::log: return log(a);
          case Func::sqrt: return sqrt(a);
          case Func::atan: return atan(a);
        }
      }
    }
    throw ShapeMismatch("corrupt expression node");
  }

  Expr root_;
  std::map<const ExprNode*, Binding> bindings_;
};

/// Jet of `e` at `point` (coordinates named `coords`) to the given order.
inline Jet eval_jet(const Expr& e, std::span<const std::string> coords, std::span<const double> point, int order,
                    const Params& params = {}) {
  if (coords.size() != point.size()) throw ShapeMismatch("point dimension differs from coordinate count");
  CompiledExpr c(e, coords, params);
  auto seeds = seed_point(point, order);
  return c(seeds);
}

/// Plain evaluation of the AST with doubles, independent of the jet path.
inline double eval_real(const Expr& n, const std::map<std::string, double, std::less<>>& vars) {
  switch (n->kind) {
    case ExprKind::literal: return n->value;
    case ExprKind::pi: return std::numbers::pi;
    case ExprKind::variable: {
      auto it = vars.find(n->name);
      if (it == vars.end()) throw UnboundVariable("'" + n->name + "'");
      return it->second;
    }
    case ExprKind::negate: return -eval_real(n->lhs, vars);
    case ExprKind::add: return eval_real(n->lhs, vars) + eval_real(n->rhs, vars);
    case ExprKind::sub: return eval_real(n->lhs, vars) - eval_real(n->rhs, vars);
    case ExprKind::mul: return eval_real(n->lhs, vars) * eval_real(n->rhs, vars);
    case ExprKind::div: return eval_real(n->lhs, vars) / eval_real(n->rhs, vars);
    case ExprKind::pow: return std::pow(eval_real(n->lhs, vars), eval_real(n->rhs, vars));
    case ExprKind::call: {
      double a = eval_real(n->lhs, vars);
      switch (n->func) {
        case Func::sin: return std::sin(a);
        case Func::cos: return std::cos(a);
        case Func::exp: return std::exp(a);
        case Func::log: return std::log(a);
        case Func::sqrt: return std::sqrt(a);
        case Func::atan: return std::atan(a);
      }
    }
  }
  return 0.0;
}

}  // namespace tractorlab
