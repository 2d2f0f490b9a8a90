#pragma once

// Check reports and their two serializations.
//
// table: a header line "# suite=<s>\tseed=<n>\tversion=<v>" followed by one
//   tab-separated line per record with the fields
//   id, pass (PASS|FAIL), computed, expected, tolerance, provenance,
//   runtime_ms, description, note.
// json-lines: a header object {"suite","seed","version"} followed by one
//   object per record with keys in the order
//   id, description, computed, expected, tolerance, provenance, pass, runtime_ms, note.
// Numbers use the shortest round-trip form; non-finite values are written as
// nan, inf, -inf (strings in JSON).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tractorlab/error.hpp"

namespace tractorlab {

inline constexpr const char* kVersion = "0.1.0";

struct CheckRecord {
  std::string id;
  std::string description;
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string provenance;
  bool pass = false;
  double runtime_ms = 0.0;
  std::string note;

  friend bool operator==(const CheckRecord& a, const CheckRecord& b) {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.id == b.id && a.description == b.description && same(a.computed, b.computed) &&
           same(a.expected, b.expected) && same(a.tolerance, b.tolerance) && a.provenance == b.provenance &&
           a.pass == b.pass && same(a.runtime_ms, b.runtime_ms) && a.note == b.note;
  }
};

struct CheckReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::vector<CheckRecord> records;

  bool all_pass() const {
    return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
  }
  void sort() {
    std::stable_sort(records.begin(), records.end(), [](const CheckRecord& a, const CheckRecord& b) { return a.id < b.id; });
  }
  void append(const CheckReport& o) { records.insert(records.end(), o.records.begin(), o.records.end()); }

  friend bool operator==(const CheckReport& a, const CheckReport& b) {
    return a.suite == b.suite && a.seed == b.seed && a.version == b.version && a.records == b.records;
  }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw SpecError("bad number '" + s + "' in report");
  return v;
}

namespace report_detail {

inline std::string clean(std::string s) {
  std::replace(s.begin(), s.end(), '\t', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '\t') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline nlohmann::ordered_json number_json(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

inline double json_number(const nlohmann::json& j) {
  if (j.is_string()) return parse_number(j.get<std::string>());
  if (j.is_null()) return std::nan("");
  return j.get<double>();
}

}  // namespace report_detail

inline std::string to_table(const CheckReport& r) {
  using report_detail::clean;
  std::ostringstream os;
  os << "# suite=" << clean(r.suite) << "\tseed=" << r.seed << "\tversion=" << r.version << "\n";
  for (const auto& c : r.records) {
    os << clean(c.id) << '\t' << (c.pass ? "PASS" : "FAIL") << '\t' << format_number(c.computed) << '\t'
       << format_number(c.expected) << '\t' << format_number(c.tolerance) << '\t' << clean(c.provenance) << '\t'
       << format_number(c.runtime_ms) << '\t' << clean(c.description) << '\t' << clean(c.note) << "\n";
  }
  return os.str();
}

inline std::string to_json_lines(const CheckReport& r) {
  using report_detail::number_json;
  std::ostringstream os;
  nlohmann::ordered_json head;
  head["suite"] = r.suite;
  head["seed"] = r.seed;
  head["version"] = r.version;
  os << head.dump() << "\n";
  for (const auto& c : r.records) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["description"] = c.description;
    j["computed"] = number_json(c.computed);
    j["expected"] = number_json(c.expected);
    j["tolerance"] = number_json(c.tolerance);
    j["provenance"] = c.provenance;
    j["pass"] = c.pass;
    j["runtime_ms"] = number_json(c.runtime_ms);
    j["note"] = c.note;
    os << j.dump() << "\n";
  }
  return os.str();
}

inline CheckReport parse_table(const std::string& text) {
  using report_detail::split_tabs;
  CheckReport r;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (!header) {
      if (line.rfind("# ", 0) != 0) throw SpecError("report table lacks a header line");
      for (const auto& f : split_tabs(line.substr(2))) {
        auto eq = f.find('=');
        if (eq == std::string::npos) throw SpecError("bad header field '" + f + "'");
        auto k = f.substr(0, eq), v = f.substr(eq + 1);
        if (k == "suite") r.suite = v;
        else if (k == "seed") r.seed = std::stoull(v);
        else if (k == "version") r.version = v;
        else throw SpecError("unknown header field '" + k + "'");
      }
      header = true;
      continue;
    }
    auto f = split_tabs(line);
    if (f.size() != 9) throw SpecError("report line has " + std::to_string(f.size()) + " fields, expected 9");
    CheckRecord c;
    c.id = f[0];
    if (f[1] != "PASS" && f[1] != "FAIL") throw SpecError("bad pass flag '" + f[1] + "'");
    c.pass = f[1] == "PASS";
    c.computed = parse_number(f[2]);
    c.expected = parse_number(f[3]);
    c.tolerance = parse_number(f[4]);
    c.provenance = f[5];
    c.runtime_ms = parse_number(f[6]);
    c.description = f[7];
    c.note = f[8];
    r.records.push_back(std::move(c));
  }
  if (!header) throw SpecError("empty report");
  return r;
}

inline CheckReport parse_json_lines(const std::string& text) {
  using report_detail::json_number;
  CheckReport r;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SpecError(std::string("bad JSON line: ") + e.what());
    }
    if (!header) {
      r.suite = j.at("suite").get<std::string>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.version = j.at("version").get<std::string>();
      header = true;
      continue;
    }
    CheckRecord c;
    c.id = j.at("id").get<std::string>();
    c.description = j.at("description").get<std::string>();
    c.computed = json_number(j.at("computed"));
    c.expected = json_number(j.at("expected"));
    c.tolerance = json_number(j.at("tolerance"));
    c.provenance = j.at("provenance").get<std::string>();
    c.pass = j.at("pass").get<bool>();
    c.runtime_ms = json_number(j.at("runtime_ms"));
    c.note = j.at("note").get<std::string>();
    r.records.push_back(std::move(c));
  }
  if (!header) throw SpecError("empty report");
  return r;
}

}  // namespace tractorlab
