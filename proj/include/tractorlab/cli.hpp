#pragma once

// Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
// 2 usage or input-file errors.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tractorlab/checks.hpp"

namespace tractorlab {

namespace cli_detail {

struct Common {
  std::string output = "table";
  std::string report_path;
  std::uint64_t seed = 1;
  bool timing = false;
  std::string model;
  std::vector<std::string> params;
  std::string geometry;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void add_common(CLI::App* app, Common& c, bool with_geometry) {
  app->add_option("--output", c.output, "report format")->check(CLI::IsMember({"table", "json-lines"}));
  app->add_option("--report", c.report_path, "write the report to a file instead of stdout");
  app->add_option("--seed", c.seed, "seed for point sampling");
  app->add_flag("--timing", c.timing, "record per-check runtimes (reports are then not reproducible)");
  if (with_geometry) {
    app->add_option("--model", c.model, "builtin model name");
    app->add_option("--param", c.params, "model parameter key=value (repeatable)");
    app->add_option("--geometry", c.geometry, "geometry-spec file");
  }
}

inline ModelBundle load_bundle(const Common& c, const std::string& fallback = "") {
  if (!c.model.empty() && !c.geometry.empty()) throw UsageError("give either --model or --geometry");
  if (!c.geometry.empty()) {
    if (!c.params.empty()) throw UsageError("--param applies to --model only");
    return load_geometry_file(c.geometry);
  }
  std::string name = c.model.empty() ? fallback : c.model;
  if (name.empty()) throw UsageError("a --model or --geometry is required");
  ModelArgs args;
  for (const auto& p : c.params) {
    auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + p + "'");
    args[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return build_model(name, args);
}

inline std::string pick(const std::string& given, const std::vector<std::string>& names, const char* what) {
  if (!given.empty()) return given;
  if (names.size() == 1) return names.front();
  for (const auto& n : names) {
    if (n == "sigma") return n;
  }
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw UsageError(std::string("several candidates, choose one with --") + what + " (available: " + list + ")");
}

template <class Map>
std::vector<std::string> keys(const Map& m) {
  std::vector<std::string> out;
  for (const auto& kv : m) out.push_back(kv.first);
  return out;
}

/// Embeddings whose ambient metric is `g`; all embeddings if none is.
inline std::vector<std::string> embeddings_on(const ModelBundle& m, const MetricField& g) {
  std::vector<std::string> out;
  for (const auto& [n, e] : m.embeddings) {
    if (e.ambient.same_as(g)) out.push_back(n);
  }
  return out.empty() ? keys(m.embeddings) : out;
}

inline std::string point_text(std::span<const double> p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + format_number(p[i]);
  return s + ")";
}

inline std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_number(spec_detail::trim(item)));
    } catch (const Error&) {
      throw UsageError(std::string("bad number '") + item + "' in " + what);
    }
  }
  return out;
}

/// Known value of `quantity` for `target`, if the bundle has one.
inline const KnownValue* find_known(const ModelBundle& m, const std::string& quantity, const std::string& target) {
  for (const auto& k : m.known) {
    if (k.quantity == quantity && k.target == target) return &k;
  }
  return nullptr;
}

inline void compare_or_observe(Recorder& rec, const ModelBundle& m, const std::string& id, const std::string& quantity,
                               const std::string& target, const std::string& description,
                               const std::function<double()>& compute) {
  if (const KnownValue* k = find_known(m, quantity, target)) {
    rec.value(id, description, k->provenance, k->expected, k->tolerance, compute, k->comparison);
  } else {
    rec.observe(id, description, compute);
  }
}

// ----------------------------------------------------------------- commands

inline CheckReport cmd_verify(const Common& c, const std::string& suite) {
  CheckContext ctx{c.seed, c.timing};
  if (!c.model.empty() || !c.geometry.empty()) {
    ModelBundle m = load_bundle(c);
    CheckReport r;
    r.suite = "known:" + m.name;
    r.seed = c.seed;
    Recorder rec(r, ctx);
    check_known_values(rec, m);
    r.sort();
    return r;
  }
  bool known = suite == "all";
  for (const auto& n : suite_names()) known = known || n == suite;
  if (!known) throw UsageError("unknown suite '" + suite + "'");
  return run_suite(suite, ctx);
}

inline CheckReport cmd_scurv(const Common& c, const std::string& density_opt, int points) {
  ModelBundle m = load_bundle(c);
  if (points < 1) throw UsageError("--points must be positive");
  CheckReport r;
  r.suite = "scurv";
  r.seed = c.seed;
  Recorder rec(r, CheckContext{c.seed, c.timing});
  std::vector<std::string> names = density_opt.empty() ? keys(m.densities) : std::vector<std::string>{density_opt};
  for (const auto& name : names) {
    const Density& s = m.density(name);
    if (s.weight != 1.0) continue;
    auto pts = sample_points(s.metric.chart(), points, derive_seed(c.seed, "scurv." + name));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      char idx[32];
      std::snprintf(idx, sizeof idx, "%04zu", i);
      const Point& p = pts[i];
      compare_or_observe(rec, m, "scurv." + name + "." + idx, "s_curvature", name, "S at " + point_text(p),
                         [&] { return s_curvature(s, p); });
    }
  }
  if (r.records.empty()) throw UsageError("no weight-1 density to evaluate");
  r.sort();
  return r;
}

inline CheckReport cmd_expand(const Common& c, const std::string& density_opt, const std::string& embedding_opt,
                              int order, int feet) {
  ModelBundle m = load_bundle(c);
  const std::string dn = pick(density_opt, keys(m.densities), "density");
  const std::string en = pick(embedding_opt, embeddings_on(m, m.density(dn).metric), "embedding");
  DefiningDensity dd = defining_density(m, dn, en, feet);
  const int d = dd.dim();
  const int target = order > 0 ? order : d;
  if (target > d) throw UsageError("--order must not exceed the dimension");
  CheckReport r;
  r.suite = "expand";
  r.seed = c.seed;
  Recorder rec(r, CheckContext{c.seed, c.timing});
  std::optional<DefiningDensity> ex;
  std::exception_ptr failure;
  try {
    ex = expand(dd, target);
  } catch (const Error&) {
    failure = std::current_exception();
  }
  auto get = [&]() -> const DefiningDensity& {
    if (!ex) std::rethrow_exception(failure);
    return *ex;
  };
  for (int k = 1; k <= target; ++k) {
    rec.value("expand.stage" + std::to_string(k), "residual order after stage " + std::to_string(k), "derived",
              k - 0.1, 0.0, [&] { return get().stage_orders.at(static_cast<std::size_t>(k - 1)); },
              Comparison::at_least);
  }
  for (std::size_t i = 0; i < dd.feet.size(); ++i) {
    rec.value("expand.final." + std::to_string(i), "final residual order at " + point_text(dd.feet[i]), "derived",
              target - 0.1, 0.0, [&] { return residual_order(get().sigma, dd.feet[i], {}, target); },
              Comparison::at_least);
  }
  r.sort();
  return r;
}

inline void energy_records(Recorder& rec, const ModelBundle& m, const std::string& en) {
  const Embedding& e = m.embedding(en);
  EnergyRequest req = EnergyRequest::automatic(e);
  std::optional<Energies> res;
  auto get = [&]() -> const Energies& {
    if (!res) res = energies(e, req);
    return *res;
  };
  compare_or_observe(rec, m, "energies.area", "area", en, "area", [&] { return area(e).value; });
  compare_or_observe(rec, m, "energies.bending", "bending", en, "bending energy", [&] { return *get().bending; });
  if (req.q3) compare_or_observe(rec, m, "energies.q3", "q3", en, "q3", [&] { return *get().q3; });
  if (req.q4) compare_or_observe(rec, m, "energies.q4", "q4", en, "q4", [&] { return *get().q4; });
  if (req.willmore_flat) {
    compare_or_observe(rec, m, "energies.willmore_flat", "willmore_flat", en, "Willmore energy",
                       [&] { return *get().willmore_flat; });
  }
  if (req.gauss_bonnet) {
    compare_or_observe(rec, m, "energies.gauss_bonnet", "gauss_bonnet", en, "Gauss-Bonnet integral",
                       [&] { return *get().gauss_bonnet; });
  }
}

inline CheckReport cmd_energies(const Common& c, const std::string& embedding_opt) {
  ModelBundle m = load_bundle(c);
  const std::string en = pick(embedding_opt, keys(m.embeddings), "embedding");
  CheckReport r;
  r.suite = "energies";
  r.seed = c.seed;
  Recorder rec(r, CheckContext{c.seed, c.timing});
  energy_records(rec, m, en);
  r.sort();
  return r;
}

inline CheckReport cmd_willmore(const Common& c, const std::string& density_opt, const std::string& embedding_opt,
                                int feet) {
  ModelBundle m = load_bundle(c);
  const std::string dn = pick(density_opt, keys(m.densities), "density");
  const std::string en = pick(embedding_opt, embeddings_on(m, m.density(dn).metric), "embedding");
  DefiningDensity dd = defining_density(m, dn, en, feet);
  CheckReport r;
  r.suite = "willmore";
  r.seed = c.seed;
  Recorder rec(r, CheckContext{c.seed, c.timing});
  std::optional<DefiningDensity> unit;
  auto get = [&]() -> const DefiningDensity& {
    if (!unit) unit = expand(dd, dd.dim(), ExpandOptions{{}, false});
    return *unit;
  };
  for (std::size_t i = 0; i < dd.feet.size(); ++i) {
    const Point& x = dd.feet[i];
    compare_or_observe(rec, m, "willmore.obstruction." + std::to_string(i), "obstruction_max", dn,
                       "obstruction density at " + point_text(x), [&] { return obstruction(get(), x).value; });
  }
  energy_records(rec, m, en);
  r.sort();
  return r;
}

inline CheckReport cmd_transport(const Common& c, const std::string& path_text, const std::string& tractor_text,
                                 const std::string& metric_name) {
  ModelBundle m = load_bundle(c, "round_sphere");
  const MetricField& g = m.metric(metric_name);
  const int d = g.dim();
  std::vector<Point> pts;
  std::stringstream ss(path_text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    Point p = parse_numbers(item, "--path");
    if (static_cast<int>(p.size()) != d) throw UsageError("path points need " + std::to_string(d) + " coordinates");
    pts.push_back(std::move(p));
  }
  if (pts.size() < 2) throw UsageError("--path needs at least two points separated by ';'");
  std::vector<double> top{0.0}, bottom{1.0};
  std::vector<double> mid(static_cast<std::size_t>(d), 0.0);
  if (!tractor_text.empty()) {
    std::vector<std::string> parts;
    std::stringstream ts(tractor_text);
    while (std::getline(ts, item, ';')) parts.push_back(item);
    if (parts.size() != 3) throw UsageError("--tractor expects 'top;m1,...,md;bottom'");
    top = parse_numbers(parts[0], "--tractor");
    mid = parse_numbers(parts[1], "--tractor");
    bottom = parse_numbers(parts[2], "--tractor");
    if (top.size() != 1 || bottom.size() != 1 || static_cast<int>(mid.size()) != d) {
      throw UsageError("--tractor has the wrong number of components");
    }
  }
  Tractor u0 = make_tractor(g, pts.front(), 0.0, top[0], Eigen::Map<Eigen::VectorXd>(mid.data(), d), bottom[0]);
  CheckReport r;
  r.suite = "transport";
  r.seed = c.seed;
  Recorder rec(r, CheckContext{c.seed, c.timing});
  std::optional<TransportResult> res;
  auto get = [&]() -> const TransportResult& {
    if (!res) res = parallel_transport(u0, polyline_path(pts));
    return *res;
  };
  const bool closed = pts.front() == pts.back();
  auto slot = [&](const std::string& id, int k) {
    const std::string desc = "transported slot " + std::to_string(k) + " at " + point_text(pts.back());
    const double initial = u0.stacked()(k);
    auto compute = [&get, k] { return get().value.stacked()(k); };
    if (closed) rec.value(id, desc + " (closed loop, flat connection)", "literature", initial, 1e-6, compute);
    else rec.observe(id, desc, compute);
  };
  slot("transport.slot0.top", 0);
  for (int a = 0; a < d; ++a) slot("transport.slot" + std::to_string(a + 1) + ".mid", a + 1);
  slot("transport.slot" + std::to_string(d + 1) + ".bottom", d + 1);
  rec.value("transport.h_drift", "change of h(U, U) along the path", "elementary", 0.0, 1e-8,
            [&] { return get().metric_drift; });
  r.sort();
  return r;
}

}  // namespace cli_detail

/// Runs the command line; the report goes to `out` or the --report file.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Conformal tractor calculus checks and evaluations", "tractorlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common verify_c, scurv_c, expand_c, willmore_c, transport_c, energies_c;
  std::string suite = "all", density, embedding, path, tractor, metric = "ambient";
  int points = 10, order = 0, feet = 4;

  auto* verify = app.add_subcommand("verify", "run the regression suite, a named suite, or a model's known values");
  add_common(verify, verify_c, true);
  verify->add_option("--suite", suite, "suite name or 'all'");
  auto* list = verify->add_flag("--list", "list suite names and exit");

  auto* scurv = app.add_subcommand("scurv", "S-curvature at seeded points");
  add_common(scurv, scurv_c, true);
  scurv->add_option("--density", density, "density name (default: all weight-1 densities)");
  scurv->add_option("--points", points, "number of sample points");

  auto* expand_cmd = app.add_subcommand("expand", "singular Yamabe expansion with residual orders per stage");
  add_common(expand_cmd, expand_c, true);
  expand_cmd->add_option("--density", density, "defining density");
  expand_cmd->add_option("--embedding", embedding, "embedding providing foot points");
  expand_cmd->add_option("--order", order, "target order (default: dimension)");
  expand_cmd->add_option("--feet", feet, "number of foot points")->check(CLI::Range(1, 64));

  auto* willmore = app.add_subcommand("willmore", "obstruction density samples and energies");
  add_common(willmore, willmore_c, true);
  willmore->add_option("--density", density, "defining density");
  willmore->add_option("--embedding", embedding, "embedding");
  willmore->add_option("--feet", feet, "number of foot points")->check(CLI::Range(1, 64));

  auto* transport = app.add_subcommand("transport", "tractor parallel transport along a polyline");
  add_common(transport, transport_c, true);
  transport->add_option("--path", path, "points 'x,y,z;x,y,z;...' in chart coordinates")->required();
  transport->add_option("--tractor", tractor, "initial tractor 'top;m1,...,md;bottom' (default X)");
  transport->add_option("--metric", metric, "metric of the bundle used as the scale");

  auto* energies_cmd = app.add_subcommand("energies", "quadrature energies of an embedding");
  add_common(energies_cmd, energies_c, true);
  energies_cmd->add_option("--embedding", embedding, "embedding");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Common* common = nullptr;
  CheckReport report;
  try {
    if (verify->parsed()) {
      common = &verify_c;
      if (*list) {
        for (const auto& s : suite_list()) out << s.name << '\t' << s.description << '\n';
        return 0;
      }
      report = cmd_verify(verify_c, suite);
    } else if (scurv->parsed()) {
      common = &scurv_c;
      report = cmd_scurv(scurv_c, density, points);
    } else if (expand_cmd->parsed()) {
      common = &expand_c;
      report = cmd_expand(expand_c, density, embedding, order, feet);
    } else if (willmore->parsed()) {
      common = &willmore_c;
      report = cmd_willmore(willmore_c, density, embedding, feet);
    } else if (transport->parsed()) {
      common = &transport_c;
      report = cmd_transport(transport_c, path, tractor, metric);
    } else {
      common = &energies_c;
      report = cmd_energies(energies_c, embedding);
    }
  } catch (const UsageError& e) {
    err << "tractorlab: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "tractorlab: " << e.what() << '\n';
    return 2;
  }

  const std::string text = common->output == "json-lines" ? to_json_lines(report) : to_table(report);
  if (common->report_path.empty()) {
    out << text;
  } else {
    std::ofstream f(common->report_path, std::ios::binary);
    if (!f) {
      err << "tractorlab: cannot write report '" << common->report_path << "'\n";
      return 2;
    }
    f << text;
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace tractorlab
