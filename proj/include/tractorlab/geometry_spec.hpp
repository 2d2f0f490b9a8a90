#pragma once

// Geometry-spec files: sectioned key = value text.
//
//   [manifold]            dimension, coordinates, metric g_ij (1-based, i <= j;
//                         missing off-diagonal entries are 0), optional domain
//                         (expression > 0), periodic = name:period, ...,
//                         range_<coord> = lo, hi
//   [params]              name = real; bound in every expression
//   [density NAME]        weight (default 1), expr, optional expected_s and
//                         tolerance (default 1e-8)
//   [embedding NAME]      parameters, map_1..map_d, range_<param>, periodic,
//                         euler_characteristic, density (defining density name)
//   [model]               name plus builtin parameters; excludes [manifold]
//
// '#' starts a comment, values may be double-quoted, unknown keys are errors.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tractorlab/models.hpp"

namespace tractorlab {

struct SpecEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct SpecSection {
  std::string kind;  // manifold, params, density, embedding, model
  std::string name;  // for density and embedding
  int line = 0;
  std::vector<SpecEntry> entries;
};

namespace spec_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void fail(int line, const std::string& msg) {
  throw SpecError("line " + std::to_string(line) + ": " + msg);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double real(const SpecEntry& e, const Params& params) {
  try {
    return eval_real(parse(e.value), params);
  } catch (const Error& err) {
    fail(e.line, e.key + ": " + err.what());
  }
}

inline Expr expression(const SpecEntry& e) {
  try {
    return parse(e.value);
  } catch (const Error& err) {
    fail(e.line, e.key + ": " + err.what());
  }
}

inline void check_bound(const SpecEntry& e, const Expr& x, const std::vector<std::string>& coords, const Params& params) {
  for (const auto& v : free_variables(x)) {
    bool ok = params.count(v) != 0;
    for (const auto& c : coords) ok = ok || c == v;
    if (!ok) fail(e.line, e.key + ": unbound variable '" + v + "'");
  }
}

/// Applies range_<name> and periodic entries; returns false if the key is neither.
inline bool chart_key(Chart& c, const SpecEntry& e, const Params& params) {
  auto index = [&](const std::string& n) {
    for (std::size_t i = 0; i < c.coords.size(); ++i) {
      if (c.coords[i] == n) return i;
    }
    fail(e.line, "unknown coordinate '" + n + "'");
  };
  if (e.key.rfind("range_", 0) == 0) {
    auto i = index(e.key.substr(6));
    auto parts = split_list(e.value);
    if (parts.size() != 2) fail(e.line, e.key + " needs 'lo, hi'");
    SpecEntry lo{e.key, parts[0], e.line}, hi{e.key, parts[1], e.line};
    double a = real(lo, params), b = real(hi, params);
    if (!(a < b)) fail(e.line, e.key + " needs lo < hi");
    c.ranges[i] = {a, b};
    return true;
  }
  if (e.key == "periodic") {
    for (const auto& item : split_list(e.value)) {
      auto colon = item.find(':');
      if (colon == std::string::npos) fail(e.line, "periodic entries have the form name:period");
      auto i = index(trim(item.substr(0, colon)));
      double p = real(SpecEntry{e.key, trim(item.substr(colon + 1)), e.line}, params);
      if (!(p > 0)) fail(e.line, "period must be positive");
      c.periods[i] = p;
      c.ranges[i] = {0.0, p};
    }
    return true;
  }
  return false;
}

}  // namespace spec_detail

inline std::vector<SpecSection> parse_spec_sections(const std::string& text) {
  using namespace spec_detail;
  std::vector<SpecSection> out;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    bool quoted = false;
    std::string s;
    for (char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      s += ch;
    }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated section header");
      std::istringstream hs(s.substr(1, s.size() - 2));
      SpecSection sec;
      sec.line = line;
      hs >> sec.kind >> sec.name;
      std::string extra;
      if (hs >> extra) fail(line, "section header has too many words");
      if (sec.kind == "density" || sec.kind == "embedding") {
        if (sec.name.empty()) fail(line, "[" + sec.kind + "] needs a name");
      } else if (sec.kind == "manifold" || sec.kind == "params" || sec.kind == "model") {
        if (!sec.name.empty()) fail(line, "[" + sec.kind + "] takes no name");
      } else {
        fail(line, "unknown section [" + sec.kind + "]");
      }
      for (const auto& o : out) {
        if (o.kind == sec.kind && o.name == sec.name) fail(line, "duplicate section [" + sec.kind + " " + sec.name + "]");
      }
      out.push_back(std::move(sec));
      continue;
    }
    if (out.empty()) fail(line, "key outside any section");
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    SpecEntry e{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    if (e.value.size() >= 2 && e.value.front() == '"' && e.value.back() == '"') e.value = e.value.substr(1, e.value.size() - 2);
    if (e.key.empty()) fail(line, "empty key");
    for (const auto& o : out.back().entries) {
      if (o.key == e.key) fail(line, "duplicate key '" + e.key + "'");
    }
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

/// Builds a model bundle from spec text. Densities and embeddings live on the
/// "ambient" metric, whether given by [manifold] or by a builtin [model].
inline ModelBundle load_geometry_spec(const std::string& text) {
  using namespace spec_detail;
  auto sections = parse_spec_sections(text);
  const SpecSection* manifold = nullptr;
  const SpecSection* model = nullptr;
  Params params;
  for (const auto& s : sections) {
    if (s.kind == "manifold") manifold = &s;
    if (s.kind == "model") model = &s;
    if (s.kind == "params") {
      for (const auto& e : s.entries) {
        if (e.key == "pi") fail(e.line, "pi is a builtin constant");
        params[e.key] = real(e, params);
      }
    }
  }
  if (manifold && model) fail(model->line, "[model] and [manifold] are mutually exclusive");
  if (!manifold && !model) throw SpecError("spec needs a [manifold] or a [model] section");

  ModelBundle m;
  if (model) {
    std::string name;
    ModelArgs args;
    for (const auto& e : model->entries) {
      if (e.key == "name") name = e.value;
      else args[e.key] = e.value;
    }
    if (name.empty()) fail(model->line, "[model] needs a name");
    m = build_model(name, args);
  } else {
    std::optional<int> dim;
    std::vector<std::string> coords;
    for (const auto& e : manifold->entries) {
      if (e.key == "dimension") {
        double v = real(e, params);
        if (v != std::floor(v) || v < 2 || v > 8) fail(e.line, "dimension must be an integer in [2, 8]");
        dim = static_cast<int>(v);
      } else if (e.key == "coordinates") {
        coords = split_list(e.value);
      }
    }
    if (!dim) fail(manifold->line, "[manifold] needs dimension");
    if (static_cast<int>(coords.size()) != *dim) fail(manifold->line, "coordinates must list dimension names");
    Chart chart = [&] {
      try {
        return Chart(coords);
      } catch (const Error& err) {
        fail(manifold->line, err.what());
      }
    }();
    chart.domain_params = params;
    const int d = *dim;
    std::vector<std::optional<SpecEntry>> comps(static_cast<std::size_t>(d * d));
    for (const auto& e : manifold->entries) {
      if (e.key == "dimension" || e.key == "coordinates") continue;
      if (chart_key(chart, e, params)) continue;
      if (e.key == "domain") {
        Expr x = expression(e);
        check_bound(e, x, coords, params);
        chart.domain = x;
        continue;
      }
      if (e.key.size() == 4 && e.key[0] == 'g' && e.key[1] == '_' && std::isdigit(e.key[2]) && std::isdigit(e.key[3])) {
        int a = e.key[2] - '1', b = e.key[3] - '1';
        if (a < 0 || b < 0 || a >= d || b >= d) fail(e.line, e.key + " is out of range");
        if (a > b) std::swap(a, b);
        auto& slot = comps[static_cast<std::size_t>(a * d + b)];
        if (slot) fail(e.line, e.key + " given twice");
        slot = e;
        continue;
      }
      fail(e.line, "unknown key '" + e.key + "' in [manifold]");
    }
    std::vector<ScalarField> full(static_cast<std::size_t>(d * d), ScalarField::constant(d, 0.0));
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) {
        const auto& slot = comps[static_cast<std::size_t>(a * d + b)];
        if (!slot) {
          if (a == b) fail(manifold->line, "missing diagonal component g_" + std::to_string(a + 1) + std::to_string(a + 1));
          continue;
        }
        Expr x = expression(*slot);
        check_bound(*slot, x, coords, params);
        auto f = ScalarField::from_expr(x, coords, params);
        full[static_cast<std::size_t>(a * d + b)] = f;
        full[static_cast<std::size_t>(b * d + a)] = f;
      }
    }
    m.name = "custom";
    m.metrics.emplace("ambient", MetricField(chart, full, Signature::riemannian, "custom"));
  }

  const MetricField& g = m.ambient();
  const auto& coords = g.chart().coords;
  Params all = params;
  for (const auto& [k, v] : m.cone_params) all.emplace(k, v);

  for (const auto& s : sections) {
    if (s.kind != "density") continue;
    double weight = 1.0;
    std::optional<Expr> x;
    std::optional<double> expected;
    double tol = 1e-8;
    for (const auto& e : s.entries) {
      if (e.key == "weight") weight = real(e, all);
      else if (e.key == "expr") {
        x = expression(e);
        check_bound(e, *x, coords, all);
      } else if (e.key == "expected_s") expected = real(e, all);
      else if (e.key == "tolerance") tol = real(e, all);
      else fail(e.line, "unknown key '" + e.key + "' in [density]");
    }
    if (!x) fail(s.line, "[density " + s.name + "] needs expr");
    m.densities.insert_or_assign(s.name, Density{weight, g, ScalarField::from_expr(*x, coords, all)});
    if (expected) {
      m.known.push_back({"spec.s." + s.name, "s_curvature", s.name, *expected, tol, "elementary",
                         "S of density " + s.name + " from the geometry spec"});
    }
  }

  for (const auto& s : sections) {
    if (s.kind != "embedding") continue;
    std::vector<std::string> pnames;
    for (const auto& e : s.entries) {
      if (e.key == "parameters") pnames = split_list(e.value);
    }
    if (static_cast<int>(pnames.size()) != g.dim() - 1) fail(s.line, "embedding needs dimension - 1 parameters");
    Chart pc = [&] {
      try {
        return Chart(pnames);
      } catch (const Error& err) {
        fail(s.line, err.what());
      }
    }();
    Embedding emb;
    emb.name = s.name;
    emb.ambient = g;
    std::vector<std::optional<SpecEntry>> maps(static_cast<std::size_t>(g.dim()));
    for (const auto& e : s.entries) {
      if (e.key == "parameters") continue;
      if (chart_key(pc, e, all)) continue;
      if (e.key == "euler_characteristic") {
        double v = real(e, all);
        if (v != std::floor(v)) fail(e.line, "euler_characteristic must be an integer");
        emb.euler_characteristic = static_cast<int>(v);
      } else if (e.key == "density") {
        auto it = m.densities.find(e.value);
        if (it == m.densities.end()) fail(e.line, "unknown density '" + e.value + "'");
        emb.sigma = it->second;
      } else if (e.key.rfind("map_", 0) == 0) {
        int i = 0;
        try {
          i = std::stoi(e.key.substr(4)) - 1;
        } catch (const std::exception&) {
          fail(e.line, "bad key '" + e.key + "'");
        }
        if (i < 0 || i >= g.dim()) fail(e.line, e.key + " is out of range");
        maps[static_cast<std::size_t>(i)] = e;
      } else {
        fail(e.line, "unknown key '" + e.key + "' in [embedding]");
      }
    }
    emb.params = pc;
    for (const auto& me : maps) {
      if (!me) fail(s.line, "embedding needs map_1 .. map_" + std::to_string(g.dim()));
      Expr x = expression(*me);
      check_bound(*me, x, pnames, all);
      emb.map.push_back(ScalarField::from_expr(x, pnames, all));
    }
    m.embeddings.insert_or_assign(s.name, emb);
  }
  return m;
}

inline ModelBundle load_geometry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open geometry spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_geometry_spec(ss.str());
}

}  // namespace tractorlab
