#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tractorlab/cli.hpp"

using namespace tractorlab;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "tractorlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir() {
  fs::path p = fs::temp_directory_path() / ("tractorlab_test_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int shell(const std::string& cmd) {
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kGeometries = TRACTORLAB_GEOMETRIES;

CheckReport sample_report() {
  CheckReport r;
  r.suite = "unit";
  r.seed = 99;
  r.records.push_back({"a.one", "plain value", 1.25, 1.0, 0.5, "derived", true, 0.0, ""});
  r.records.push_back({"b.nan", "observed, tabs\tand\nnewlines removed", std::nan(""), std::nan(""), std::nan(""),
                       "computed", false, 3.5, "no reference value"});
  r.records.push_back({"c.inf", "infinite order", INFINITY, -INFINITY, 0.1, "literature", true, 0.0, "at least"});
  r.records.push_back({"d.tiny", "round trip", 0.1 + 0.2, 1e-300, 5e-324, "elementary", false, 0.0, "x"});
  return r;
}

}  // namespace

// ------------------------------------------------------------------- reports

TEST(Report, TableRoundTrip) {
  CheckReport r = sample_report();
  std::string text = to_table(r);
  EXPECT_EQ(text.substr(0, text.find('\n')), "# suite=unit\tseed=99\tversion=" + std::string(kVersion));
  CheckReport back = parse_table(text);
  r.records[1].description = "observed, tabs and newlines removed";
  EXPECT_EQ(back, r);
  EXPECT_EQ(to_table(back), text);
}

TEST(Report, JsonLinesRoundTrip) {
  CheckReport r = sample_report();
  std::string text = to_json_lines(r);
  CheckReport back = parse_json_lines(text);
  EXPECT_EQ(back, r);
  EXPECT_EQ(to_json_lines(back), text);
  std::istringstream is(text);
  std::string head, first;
  std::getline(is, head);
  std::getline(is, first);
  EXPECT_EQ(head, "{\"suite\":\"unit\",\"seed\":99,\"version\":\"" + std::string(kVersion) + "\"}");
  EXPECT_EQ(first.find("{\"id\":\"a.one\",\"description\""), 0u);
  EXPECT_NE(text.find("\"computed\":\"nan\""), std::string::npos);
  EXPECT_NE(text.find("\"expected\":\"-inf\""), std::string::npos);
}

TEST(Report, MalformedInput) {
  EXPECT_THROW(parse_table(""), SpecError);
  EXPECT_THROW(parse_table("no header\n"), SpecError);
  EXPECT_THROW(parse_table("# suite=x\tseed=1\tversion=0\nid\tPASS\t1\n"), SpecError);
  EXPECT_THROW(parse_table("# suite=x\tseed=1\tversion=0\nid\tMAYBE\t1\t1\t1\tp\t0\td\tn\n"), SpecError);
  EXPECT_THROW(parse_table("# suite=x\tseed=1\tversion=0\nid\tPASS\tone\t1\t1\tp\t0\td\tn\n"), SpecError);
  EXPECT_THROW(parse_json_lines("{not json}\n"), SpecError);
}

TEST(Report, NumberFormatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(parse_number(format_number(0.1 + 0.2)), 0.1 + 0.2);
}

// ----------------------------------------------------------------------- rng

TEST(Rng, MatchesReferenceStream) {
  // Published pcg32 demo output for seed 42, stream 54.
  Pcg32 r(42, 54);
  const std::uint32_t expect[] = {0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e};
  for (auto e : expect) EXPECT_EQ(r.next_u32(), e);
}

TEST(Rng, UniformRange) {
  Pcg32 r(7);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_EQ(derive_seed(5, "a"), derive_seed(5, "a"));
  EXPECT_NE(derive_seed(5, "a"), derive_seed(5, "b"));
  EXPECT_NE(derive_seed(5, "a"), derive_seed(6, "a"));
}

// ------------------------------------------------------------ geometry specs

TEST(GeometrySpec, SectionsAndComments) {
  auto secs = parse_spec_sections("# c\n[params]\nk = 2 # trailing\n\n[density s]\nexpr = \"a # not a comment\"\n");
  ASSERT_EQ(secs.size(), 2u);
  EXPECT_EQ(secs[0].kind, "params");
  EXPECT_EQ(secs[1].kind, "density");
  EXPECT_EQ(secs[1].name, "s");
  EXPECT_EQ(secs[1].entries[0].value, "a # not a comment");
}

TEST(GeometrySpec, BundledFilesLoad) {
  for (const char* f : {"sphere_height.spec", "hyperbolic.spec", "clifford_polar.spec", "ellipsoid_model.spec",
                        "clifford_model.spec"}) {
    EXPECT_NO_THROW(load_geometry_file(kGeometries + "/" + f)) << f;
  }
  ModelBundle m = load_geometry_file(kGeometries + "/sphere_height.spec");
  const Density& s = m.density("sigma");
  Point p = {0.3, -0.2, 0.4};
  EXPECT_NEAR(s_curvature(s, p), 0.75, 1e-10);
  ModelBundle c = load_geometry_file(kGeometries + "/clifford_polar.spec");
  EXPECT_EQ(c.embedding("torus").euler_characteristic, 0);
}

TEST(GeometrySpec, Errors) {
  const std::string base = "[manifold]\ndimension = 2\ncoordinates = x, y\ng_11 = 1\ng_22 = 1\n";
  EXPECT_NO_THROW(load_geometry_spec(base));
  auto fails = [](const std::string& text) {
    try {
      load_geometry_spec(text);
    } catch (const SpecError&) {
      return true;
    }
    return false;
  };
  EXPECT_TRUE(fails(base + "colour = blue\n"));
  EXPECT_TRUE(fails(base + "[params]\na = 1\n[params]\nb = 2\n"));
  EXPECT_TRUE(fails("[manifold]\ndimension = 2\ncoordinates = x, y\ng_11 = 1\n"));
  EXPECT_TRUE(fails(base + "[density s]\nexpr = x + w\n"));
  EXPECT_TRUE(fails(base + "[density s]\nexpr = \"x +\"\n"));
  EXPECT_TRUE(fails(base + "g_11 = 2\n"));
  EXPECT_TRUE(fails(base + "[shape]\n"));
  EXPECT_TRUE(fails("dimension = 2\n"));
  EXPECT_TRUE(fails(""));
  EXPECT_TRUE(fails(base + "[density s]\nexpr = x\n[embedding c]\nparameters = t\nmap_1 = t\n"));
  try {
    load_geometry_spec(base + "[density s]\nweight = 1\nexpr = q\n");
    FAIL() << "expected SpecError";
  } catch (const SpecError& e) {
    EXPECT_NE(std::string(e.what()).find("8"), std::string::npos) << e.what();
  }
}

// ------------------------------------------------------------- in process

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"scurv", "--output", "xml", "--model", "flat"}).code, 2);
  EXPECT_EQ(run({"scurv", "--model", "no_such_model"}).code, 2);
  EXPECT_EQ(run({"scurv", "--model", "flat", "--geometry", kGeometries + "/sphere_height.spec"}).code, 2);
  EXPECT_EQ(run({"transport", "--model", "flat"}).code, 2);
  CliRun r = run({"verify", "--suite", "no-such-suite"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ListAndVerifySuite) {
  CliRun list = run({"verify", "--list"});
  EXPECT_EQ(list.code, 0);
  EXPECT_NE(list.out.find("sphere-height"), std::string::npos);
  CliRun r = run({"verify", "--suite", "sphere-height"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  CheckReport rep = parse_table(r.out);
  EXPECT_EQ(rep.suite, "sphere-height");
  EXPECT_FALSE(rep.records.empty());
  EXPECT_TRUE(rep.all_pass());
  for (const auto& c : rep.records) EXPECT_EQ(c.runtime_ms, 0.0);
}

TEST(Cli, ScurvIsReproducible) {
  std::vector<std::string> args = {"scurv", "--geometry", kGeometries + "/sphere_height.spec", "--points", "10",
                                   "--seed", "7"};
  CliRun a = run(args), b = run(args);
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  CheckReport rep = parse_table(a.out);
  int sigma = 0;
  for (const auto& c : rep.records) {
    if (c.id.find("sigma") != std::string::npos) {
      EXPECT_NEAR(c.computed, 0.75, 1e-8) << c.id;
      ++sigma;
    }
  }
  EXPECT_EQ(sigma, 10);
  args.back() = "8";
  EXPECT_NE(run(args).out, a.out);
}

TEST(Cli, ParamOverridesModel) {
  CliRun r = run({"scurv", "--model", "sphere_height", "--param", "k=2", "--density", "sigma", "--points", "3",
               "--output", "json-lines"});
  EXPECT_EQ(r.code, 0) << r.err;
  CheckReport rep = parse_json_lines(r.out);
  ASSERT_EQ(rep.records.size(), 3u);
  for (const auto& c : rep.records) EXPECT_NEAR(c.computed, -3.0, 1e-8);
}

TEST(Cli, ExpandReportFile) {
  fs::path dir = scratch_dir();
  fs::path out = dir / "expand.tsv";
  CliRun r = run({"expand", "--model", "clifford_torus", "--order", "3", "--feet", "2", "--report", out.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  CheckReport rep = parse_table(slurp(out));
  EXPECT_EQ(rep.suite, "expand");
  int stages = 0, finals = 0;
  for (const auto& c : rep.records) {
    if (c.id.rfind("expand.stage", 0) == 0) {
      ++stages;
      EXPECT_GE(c.computed, c.expected) << c.id;
    }
    if (c.id.rfind("expand.final.", 0) == 0) {
      ++finals;
      EXPECT_GE(c.computed, 2.9) << c.id;
    }
  }
  EXPECT_EQ(stages, 3);
  EXPECT_EQ(finals, 2);
  fs::remove_all(dir);
}

TEST(Cli, TransportAlongPath) {
  CliRun r = run({"transport", "--model", "flat", "--path", "0,0,0;0.3,0,0;0.3,0.2,0.1", "--output", "json-lines"});
  EXPECT_EQ(r.code, 0) << r.err;
  CheckReport rep = parse_json_lines(r.out);
  EXPECT_FALSE(rep.records.empty());
  EXPECT_EQ(run({"transport", "--model", "flat", "--path", "0,0;1"}).code, 2);
}

// ----------------------------------------------------------------- binary

TEST(Cli, BinaryExitCodesAndOutput) {
  const std::string cli = TRACTORLAB_CLI;
  fs::path dir = scratch_dir();
  fs::path a = dir / "a.jsonl", b = dir / "b.jsonl";
  const std::string geo = kGeometries + "/hyperbolic.spec";
  EXPECT_EQ(shell("\"" + cli + "\" scurv --geometry \"" + geo + "\" --points 4 --output json-lines > \"" + a.string() + "\""), 0);
  EXPECT_EQ(shell("\"" + cli + "\" scurv --geometry \"" + geo + "\" --points 4 --output json-lines --report \"" +
                  b.string() + "\""),
            0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(parse_json_lines(slurp(a)).records.empty());
  EXPECT_EQ(shell("\"" + cli + "\" bogus 2> /dev/null"), 2);
  EXPECT_EQ(shell("\"" + cli + "\" --help > /dev/null"), 0);
  fs::remove_all(dir);
}
