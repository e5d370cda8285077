#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "dpem/commands.hpp"

using namespace dpem;
namespace fs = std::filesystem;
using Catch::Matchers::WithinRel;

namespace {

const fs::path kFixtures = DPEM_FIXTURE_DIR;
const fs::path kData = DPEM_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dpem_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ModelRecord load_model(const fs::path& p) {
  std::ifstream in(p);
  return read_model(in, p.string());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("fit of the demo data reproduces the fixture", "[commands]") {
  const fs::path out = scratch("fixture");
  std::ostringstream log;
  const auto written = cmd_fit({{kData / "two_component_demo.csv"}, "dp-q1", std::nullopt, 2, {}, out}, log);
  REQUIRE(written.size() == 1);
  CHECK(written[0] == out / "two_component_demo.model");
  CHECK(slurp(written[0]) == slurp(kFixtures / "two_component_demo.model"));
  CHECK(log.str().rfind("two_component_demo: K=2 method=dp-q1", 0) == 0);
}

TEST_CASE("K = 1 fit gives the weighted sample moments", "[commands]") {
  const fs::path out = scratch("k1");
  write_text(out / "w.csv", "x,count\n0,1\n1,3\n5,2\n");
  std::ostringstream log;
  cmd_fit({{out / "w.csv"}, "eq", std::nullopt, 1, {}, out}, log);
  const ModelRecord m = load_model(out / "w.model");
  const double mean = (0.0 + 3.0 + 10.0) / 6.0;
  const double var = (mean * mean + 3.0 * (1.0 - mean) * (1.0 - mean) + 2.0 * (5.0 - mean) * (5.0 - mean)) / 6.0;
  CHECK(m.params.weight(0) == 1.0);
  CHECK_THAT(m.params.mean(0), WithinRel(mean, 1e-12));
  CHECK_THAT(m.params.std_dev(0), WithinRel(std::sqrt(var), 1e-12));
  CHECK(m.total_weight == 6.0);
  CHECK_THAT(m.bic, WithinRel(-2.0 * m.loglik + 2.0 * std::log(6.0), 1e-12));
}

TEST_CASE("spectra input gives one model per sample", "[commands]") {
  const fs::path out = scratch("spectra");
  std::ostringstream log;
  const auto written =
      cmd_fit({{kData / "three_spectra.tsv", InputFormat::kSpectraTsv, std::nullopt}, "dp-q4", 5.0, 4, {}, out}, log);
  REQUIRE(written.size() == 3);
  for (int s = 1; s <= 3; ++s) {
    const fs::path p = out / ("three_spectra." + std::to_string(s) + ".model");
    CHECK(fs::exists(p));
    const ModelRecord m = load_model(p);
    CHECK(m.params.size() == 4);
    CHECK(m.sigma_min == 1.0);
    CHECK(m.alpha_min == 1e-5);
    CHECK(m.method == "dp-q4(5)");
  }
}

TEST_CASE("scan-k", "[commands]") {
  const fs::path out = scratch("scan");
  std::ostringstream log;

  SECTION("a single K is selected") {
    const auto res = cmd_scan_k({{kData / "two_component_demo.csv"}, "dp-q1", std::nullopt, 3, 3, {}, out}, log);
    REQUIRE(res.size() == 1);
    CHECK(res[0].best_k == 3u);
    CHECK(load_model(out / "two_component_demo.best.model").params.size() == 3);
  }

  SECTION("the demo data selects two components") {
    const auto res = cmd_scan_k({{kData / "two_component_demo.csv"}, "dp-q4", 0.1, 1, 5, {}, out}, log);
    CHECK(res[0].best_k == 2u);
    std::istringstream table(slurp(out / "two_component_demo.scan.csv"));
    std::string line;
    std::getline(table, line);
    CHECK(line == "K,status,loglik,bic,iterations,converged");
    int rows = 0;
    while (std::getline(table, line)) {
      CHECK(line.rfind(std::to_string(++rows) + ",ok,", 0) == 0);
    }
    CHECK(rows == 5);
  }

  SECTION("failed K values are recorded and skipped") {
    write_text(out / "tiny.csv", "x\n0\n1\n2\n3\n10\n11\n");
    const auto res = cmd_scan_k({{out / "tiny.csv"}, "dp-q3", std::nullopt, 1, 5, {}, out}, log);
    REQUIRE(res[0].best_k.has_value());
    CHECK(*res[0].best_k <= 3);
    const std::string table = slurp(out / "tiny.scan.csv");
    CHECK(table.find("4,infeasible,,,,\n") != std::string::npos);
    CHECK(table.find("5,infeasible,,,,\n") != std::string::npos);
  }
}

TEST_CASE("benchmark", "[commands]") {
  const fs::path out = scratch("bench");

  SECTION("one replicate and one method give one data row") {
    write_text(out / "one.json", R"({"groups": [2], "ov_values": [0.1], "replicates": 1, "N": 200, "K": 4,
                                     "methods": ["dp-q1"], "master_seed": 3})");
    const BenchmarkFiles f = cmd_benchmark({out / "one.json", std::nullopt, out}, std::cout);
    std::istringstream runs(slurp(f.runs));
    std::string line;
    int rows = -1;
    while (std::getline(runs, line)) ++rows;
    CHECK(rows == 1);
    CHECK(slurp(f.summary).rfind("group,ov,method,AvgLogD,AvgP,fits,failures\n2,0.1,dp-q1,", 0) == 0);
  }

  SECTION("reruns with the same seed give identical summaries") {
    write_text(out / "cfg.json", R"({"groups": [1, 4], "ov_values": [0.1, 0.2], "replicates": 3, "N": 300, "K": 5,
                                     "methods": ["eq", "hclu-a", {"name": "dp-q4", "delta": 0.1}],
                                     "master_seed": 11, "threads": 2})");
    const BenchmarkFiles a = cmd_benchmark({out / "cfg.json", std::nullopt, out / "a"}, std::cout);
    const BenchmarkFiles b = cmd_benchmark({out / "cfg.json", std::nullopt, out / "b"}, std::cout);
    CHECK(slurp(a.summary) == slurp(b.summary));
    const BenchmarkFiles c = cmd_benchmark({out / "cfg.json", 12, out / "c"}, std::cout);
    CHECK(slurp(a.summary) != slurp(c.summary));
  }

  SECTION("a failing method does not touch the others") {
    BenchmarkConfig cfg;
    cfg.groups = {1};
    cfg.ov_values = {0.2};
    cfg.replicates = 2;
    cfg.n = 12;
    cfg.k = 7;
    cfg.methods = {InitMethod::parse("dp-q3"), InitMethod::parse("eq")};
    const BenchmarkResult r = run_benchmark(cfg);
    REQUIRE(r.runs.size() == 4);
    CHECK(r.runs[0].status == FitStatus::kInfeasible);
    CHECK(r.runs[1].status == FitStatus::kOk);
    CHECK(r.runs[1].attained);
    CHECK(r.summary[0].failures == 2);
    CHECK(r.summary[1].fits == 2);
    CHECK(r.summary[1].avg_p == 1.0);
  }

  SECTION("bad configurations are input errors") {
    write_text(out / "bad.json", R"({"groups": [5], "methods": ["eq"]})");
    CHECK_THROWS_AS(cmd_benchmark({out / "bad.json", std::nullopt, out}, std::cout), InputError);
    write_text(out / "bad2.json", R"({"methods": ["dp-q4"]})");
    CHECK_THROWS_AS(cmd_benchmark({out / "bad2.json", std::nullopt, out}, std::cout), InputError);
    write_text(out / "bad3.json", "{not json");
    CHECK_THROWS_AS(cmd_benchmark({out / "bad3.json", std::nullopt, out}, std::cout), InputError);
  }
}

TEST_CASE("simulate writes data and the true model", "[commands]") {
  const fs::path out = scratch("simulate");
  SimulateCommand cmd;
  cmd.group = 3;
  cmd.k = 10;
  cmd.n = 500;
  cmd.out_dir = out;
  std::ostringstream log;
  const auto [points, model] = cmd_simulate(cmd, log);
  std::ifstream in(points);
  const WeightedSample d = read_points_csv(in);
  CHECK(d.total_weight() == 500.0);
  const ModelRecord m = load_model(model);
  CHECK(m.params.size() == 10);
  CHECK_THAT(m.params.weight(9), WithinRel(10.0 / 55.0, 1e-15));
  CHECK_THAT(log_likelihood(d, m.params), WithinRel(m.loglik, 1e-9));
}

TEST_CASE("method names", "[commands]") {
  CHECK(InitMethod::parse("DP_Q4", 0.1).name() == "dp-q4(0.1)");
  CHECK(InitMethod::parse("dp-q4(0.5)").delta == 0.5);
  CHECK(InitMethod::parse("dp-q4:2").name() == "dp-q4(2)");
  CHECK(InitMethod::parse("HCLU_A").kind == InitKind::kHclustAverage);
  CHECK_THROWS_AS(InitMethod::parse("dp-q4"), InputError);
  CHECK_THROWS_AS(InitMethod::parse("dp-q1(0.1)"), InputError);
  CHECK_THROWS_AS(InitMethod::parse("kmeans"), InputError);
  CHECK(parse_range("2000..4120") == std::pair<double, double>{2000.0, 4120.0});
  CHECK_THROWS_AS(parse_range("5..1"), InputError);
  CHECK_THROWS_AS(parse_range("5-1"), InputError);
}

TEST_CASE("command line exit codes", "[commands]") {
  const fs::path out = scratch("cli");
  const std::string cli = DPEM_CLI_PATH;
  auto run = [&](const std::string& args) {
    const int status = std::system((cli + " " + args + " > " + (out / "log.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  const std::string demo = (kData / "two_component_demo.csv").string();
  CHECK(run("fit " + demo + " --k 2 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "two_component_demo.model"));
  CHECK(run("fit " + demo + " --k 2 --method dp-q4 --delta 0.1 --out " + out.string()) == 0);
  CHECK(run("fit " + (out / "missing.csv").string() + " --k 2") == 2);
  CHECK(run("fit " + demo + " --k 2 --method bogus") == 2);
  CHECK(run("fit " + demo + " --k 2 --method dp-q4") == 2);
  CHECK(run("fit " + demo + " --k 2 --alpha-min 0.6") == 2);
  CHECK(run("fit " + demo + " --no-such-flag") == 2);
  CHECK(run("fit " + demo + " --k 100000 --out " + out.string()) == 2);  // alpha_min >= 1/K
  CHECK(run("fit " + demo + " --k 401 --out " + out.string()) == 3);
  CHECK(run("scan-k " + demo + " --k-range 1..3 --method dp-q1 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "two_component_demo.scan.csv"));
  CHECK(run("scan-k " + demo + " --k-range 0..3") == 2);
  CHECK(run("simulate --group 2 --k 3 --n 50 --out " + out.string()) == 0);
  CHECK(fs::exists(out / "simulated.truth.model"));
  CHECK(run("simulate --group 7") == 2);
  CHECK(run("benchmark " + (out / "none.json").string()) == 2);
  // The block variance overflows, so no partition is usable.
  write_text(out / "far.csv", "x\n0\n1e300\n");
  CHECK(run("fit " + (out / "far.csv").string() + " --k 1") == 3);
}
