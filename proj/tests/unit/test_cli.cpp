#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "loom/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "loom");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = loom::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("loom_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// gen-zoo, gen-profiles (with SLOs), optimize, preload, simulate into `dir`.
void pipeline(const TempDir& d) {
  REQUIRE(run({"gen-zoo", "--template", "custom", "--tasks", "2", "--variants", "3", "--subgraphs", "2", "--out", d / "zoo.json"}).code == 0);
  REQUIRE(run({"gen-profiles", "--zoo", d / "zoo.json", "--seed", "4", "--processors", "2", "--out", d / "profiles.json",
               "--latency-csv", d / "lat.csv", "--slo", d / "slo.json"}).code == 0);
  REQUIRE(run({"optimize", "--zoo", d / "zoo.json", "--profiles", d / "profiles.json", "--slo", d / "slo.json",
               "--seed", "4", "--train-n", "6", "--out", d / "plans.json"}).code == 0);
  REQUIRE(run({"preload", "--zoo", d / "zoo.json", "--profiles", d / "profiles.json", "--slo", d / "slo.json",
               "--seed", "4", "--train-n", "6", "--budget-frac", "0.5", "--out", d / "preload.json"}).code == 0);
  REQUIRE(run({"simulate", "--zoo", d / "zoo.json", "--profiles", d / "profiles.json", "--slo", d / "slo.json",
               "--seed", "4", "--train-n", "6", "--preload", d / "preload.json", "--queries", "3", "--out-dir", d / "sim"}).code == 0);
}

}  // namespace

TEST_CASE("stitch count for the template zoos") {
  TempDir d;
  REQUIRE(run({"gen-zoo", "--template", "intel", "--out", d / "intel.json"}).code == 0);
  Result r = run({"stitch", "--zoo", d / "intel.json", "--count-only"});
  CHECK(r.code == 0);
  CHECK(r.out == "4000\n");
  REQUIRE(run({"gen-zoo", "--template", "jetson", "--out", d / "jetson.json"}).code == 0);
  CHECK(run({"stitch", "--zoo", d / "jetson.json", "--count-only"}).out == "400\n");

  REQUIRE(run({"gen-zoo", "--template", "custom", "--tasks", "1", "--variants", "2", "--subgraphs", "2", "--out", d / "z.json"}).code == 0);
  r = run({"stitch", "--zoo", d / "z.json"});
  CHECK(r.out == "task_id,rank,donors\n1,0,1-1\n1,1,1-2\n1,2,2-1\n1,3,2-2\n");
}

TEST_CASE("end-to-end pipeline writes the expected artefacts") {
  TempDir d;
  pipeline(d);
  for (const char* f : {"zoo.json", "profiles.json", "lat.csv", "slo.json", "plans.json", "preload.json", "sim/report.csv", "sim/summary.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(d.path / f));
  }
  const json slo = json::parse(loom::read_file(d / "slo.json"));
  CHECK(slo["configs"].size() == 25);
  const json plans = json::parse(loom::read_file(d / "plans.json"));
  CHECK(plans["plans"].size() == 25);
  CHECK(plans["seed"] == 4);
  const json pre = json::parse(loom::read_file(d / "preload.json"));
  CHECK(pre["total_mem_bytes"].get<long long>() <= pre["budget_bytes"].get<long long>());
  const auto report = loom::report_from_csv(loom::read_file(d / "sim/report.csv"));
  CHECK(report.rows.size() == 7 * 25 * 2);

  const Result s = run({"report", "--in", d / "sim/report.csv", "--emit", "violation"});
  CHECK(s.code == 0);
  CHECK(s.out.find("SPARSELOOM") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
  TempDir a, b;
  pipeline(a);
  pipeline(b);
  for (const char* f : {"zoo.json", "profiles.json", "lat.csv", "slo.json", "plans.json", "preload.json", "sim/report.csv", "sim/summary.csv"}) {
    CAPTURE(f);
    CHECK(loom::read_file(a.path / f) == loom::read_file(b.path / f));
  }
}

TEST_CASE("profile and experiment commands") {
  TempDir d;
  pipeline(d);
  Result r = run({"profile", "--zoo", d / "zoo.json", "--profiles", d / "profiles.json", "--seed", "4", "--train-n", "6",
                  "--comm-ms", "0.1", "--k", "3", "--out-dir", d / "prof"});
  CHECK(r.code == 0);
  for (const char* f : {"prof/estimator_recall.csv", "prof/latency_error.csv", "prof/profiling_cost.csv"}) CHECK(fs::exists(d.path / f));

  loom::write_file_atomic(d.path / "spec.json",
                          R"({"name":"t","zoo_template":"custom","T":2,"V":2,"S":2,"P":2,"sweep":"order_sensitivity"})");
  r = run({"experiment", "--spec", d / "spec.json", "--out-dir", d / "bundle"});
  CHECK(r.code == 0);
  CHECK(fs::exists(d.path / "bundle" / "best_orders.csv"));
  CHECK(fs::exists(d.path / "bundle" / "spec.json"));
}

TEST_CASE("errors are reported as one parseable line") {
  TempDir d;
  Result r = run({"stitch", "--zoo", d / "missing.json"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error kind=io message=\"", 0) == 0);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  loom::write_file_atomic(d.path / "bad.json", "{not json");
  r = run({"stitch", "--zoo", d / "bad.json"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error kind=parse", 0) == 0);

  pipeline(d);
  loom::write_file_atomic(d.path / "impossible.json",
                          R"({"config_id":3,"per_task":[{"task_id":1,"acc_floor":100,"lat_ceiling_ms":0.001},)"
                          R"({"task_id":2,"acc_floor":100,"lat_ceiling_ms":0.001}]})");
  r = run({"optimize", "--zoo", d / "zoo.json", "--profiles", d / "profiles.json", "--slo", d / "impossible.json",
           "--use-truth", "--out", d / "p.json"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error kind=all_infeasible", 0) == 0);

  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"gen-zoo"}).code == 2);
  CHECK(run({"preload", "--zoo", "z", "--profiles", "p", "--slo", "s", "--budget-frac", "1.5", "--out", "o"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}
