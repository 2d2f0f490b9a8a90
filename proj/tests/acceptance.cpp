// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "tractorlab/checks.hpp"

using namespace tractorlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Criterion {
  int number;
  std::string suite;
  std::string summary;
  double time_limit_s;  // 0 means unbounded
};

bool report_line(int number, bool pass, const std::string& text) {
  std::cout << (pass ? "PASS" : "FAIL") << "  " << number << "  " << text << std::endl;
  return pass;
}

bool run_criterion(const Criterion& c) {
  const auto t0 = Clock::now();
  CheckReport r;
  try {
    r = run_suite(c.suite, CheckContext{});
  } catch (const Error& e) {
    return report_line(c.number, false, c.summary + ": " + e.what());
  }
  const double secs = seconds_since(t0);
  int failed = 0;
  std::string first;
  for (const auto& rec : r.records) {
    if (rec.pass) continue;
    if (failed++ == 0) first = rec.id + " computed " + format_number(rec.computed) + " expected " + format_number(rec.expected);
  }
  const bool in_time = c.time_limit_s <= 0 || secs < c.time_limit_s;
  const bool ok = !r.records.empty() && failed == 0 && in_time;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f s", secs);
  std::string text = c.summary + " [" + std::to_string(r.records.size()) + " checks, " + buf + "]";
  if (failed) text += " " + std::to_string(failed) + " failed, first: " + first;
  if (!in_time) text += " over the " + format_number(c.time_limit_s) + " s limit";
  return report_line(c.number, ok, text);
}

bool capture(const std::string& cmd, std::string& out, int& status) {
  out.clear();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return false;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  status = ::pclose(pipe);
  return true;
}

bool full_verify_criterion() {
  const std::string cmd = std::string("\"") + TRACTORLAB_CLI + "\" verify 2>&1";
  std::string a, b;
  int sa = -1, sb = -1;
  const auto t0 = Clock::now();
  const bool ran = capture(cmd, a, sa);
  const double first_s = seconds_since(t0);
  const bool ran2 = ran && capture(cmd, b, sb);
  if (!ran || !ran2) return report_line(13, false, "could not start " + std::string(TRACTORLAB_CLI));
  const bool same = a == b;
  const bool clean = sa == 0 && sb == 0;
  const bool in_time = first_s < 120.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f s", first_s);
  std::string text = std::string("full verify deterministic and under 2 minutes [") + buf + ", " +
                     std::to_string(a.size()) + " bytes]";
  if (!same) text += " outputs differ between runs";
  if (!clean) text += " nonzero exit status";
  if (!in_time) text += " too slow";
  return report_line(13, same && clean && in_time, text);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "sphere-height", "sphere height family S = 1 - k^2", 5.0},
      {2, "flatness", "k = 1 rescaled sphere is flat", 0.0},
      {3, "conformal-invariance", "S, bending and q3 invariant under rescaling", 0.0},
      {4, "tractor-algebra", "tractor metric, signature, h(I,X), h(I,I), middle slot", 0.0},
      {5, "einstein", "Einstein scales are parallel, trichotomy", 0.0},
      {6, "holonomy", "sphere transport is path independent", 10.0},
      {7, "yamabe", "singular Yamabe expansion orders and obstruction order", 0.0},
      {8, "normal-tractor", "unit scale tractor restricts to the normal tractor", 0.0},
      {9, "clifford", "Clifford torus density, forms and ambient formula", 0.0},
      {10, "energies", "bending, q3, Willmore, Gauss-Bonnet and q4 values", 0.0},
      {11, "willmore-leading", "graph obstruction leading term", 0.0},
      {12, "laplace-robin", "Laplace-Robin identities", 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) failures += run_criterion(c) ? 0 : 1;
  failures += full_verify_criterion() ? 0 : 1;
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
