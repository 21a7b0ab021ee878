#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BWLAB_CLI;
const std::string kConfigs = BWLAB_CONFIG_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("bwlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const int status = std::system((kCli + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(slurp(path));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("simulate writes one row per tier and period") {
  TempDir d;
  REQUIRE(run("simulate -c " + kConfigs + "/classic.yaml -o " + d.path.string()) == 0);
  const auto rows = lines(d / "trajectory.csv");
  REQUIRE(rows.size() == 1 + 4 * 20);
  CHECK(rows[0] == "tier,period,demand,order,incoming,shipment,receipt,on_hand,backlog,inventory_position,cost");
  CHECK(split(rows[1])[0] == "1");
  CHECK(split(rows[1])[1] == "1");
  const auto m = nlohmann::json::parse(slurp(d / "manifest.json"));
  CHECK(m.at("command") == "simulate");
  CHECK(m.at("config_hash").get<std::string>().size() == 64);
}

TEST_CASE("same seed, same files") {
  TempDir a, b, c;
  const std::string cfg = " -c " + kConfigs + "/classic.yaml --seed 9 -o ";
  REQUIRE(run("simulate" + cfg + a.path.string()) == 0);
  REQUIRE(run("simulate" + cfg + b.path.string()) == 0);
  REQUIRE(run("simulate -c " + kConfigs + "/classic.yaml --seed 10 -o " + c.path.string()) == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "trajectory.csv") != slurp(c / "trajectory.csv"));
}

TEST_CASE("invalid configuration exits with code 2") {
  TempDir d;
  write_file(d / "bad.yaml", "tiers:\n  - smoothing: 1.5\n");
  CHECK(run("simulate -c " + (d / "bad.yaml") + " -o " + (d / "out")) == 2);
  CHECK(run("simulate -c " + (d / "missing.yaml") + " -o " + (d / "out")) == 2);
  CHECK(run("simulate --no-such-flag -o " + (d / "out")) == 2);
  CHECK(run("simulate") == 2);  // --out is required
}

TEST_CASE("analyze reproduces the closed-form table") {
  TempDir d;
  REQUIRE(run("analyze --theta 0,1 --lambda 1 --tiers 3 --demand-variance 1 --shock-variance 1 -o " +
              d.path.string()) == 0);
  const auto rows = lines(d / "bounds.csv");
  REQUIRE(rows.size() == 1 + 2 * 3);
  CHECK(rows[0] ==
        "theta,lambda,k,gamma_k,demand_bound,decision_bound,uniform_demand_bound,uniform_decision_bound");
  std::vector<double> demand, decision, gamma;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = split(rows[i]);
    if (std::stod(c[0]) != 1.0) {
      CHECK(std::stod(c[3]) == doctest::Approx(1.0));
      continue;
    }
    gamma.push_back(std::stod(c[3]));
    demand.push_back(std::stod(c[4]));
    decision.push_back(std::stod(c[5]));
  }
  CHECK(gamma == std::vector<double>{5, 5, 5});
  CHECK(demand == std::vector<double>{5, 25, 125});
  CHECK(decision[2] == doctest::Approx(62));
}

TEST_CASE("ensemble outputs and the R = 1 failure") {
  TempDir d;
  REQUIRE(run("ensemble -c " + kConfigs + "/classic.yaml --runs 6 -o " + d.path.string()) == 0);
  for (const char* f : {"orders.csv", "demand.csv", "variance.csv", "metrics.csv", "classical.csv", "boxplot.csv",
                        "excluded.csv", "manifest.json"})
    CHECK(fs::exists(d.path / f));
  CHECK(lines(d / "orders.csv").size() == 1 + 6 * 4 * 20);
  CHECK(lines(d / "variance.csv").size() == 1 + 5 * 20);

  TempDir e;
  CHECK(run("ensemble -c " + kConfigs + "/classic.yaml --runs 1 -o " + e.path.string()) == 3);
}

TEST_CASE("decompose with a single path reports the demand part unavailable") {
  TempDir d;
  REQUIRE(run("decompose -c " + kConfigs + "/linear_benchmark.yaml --paths 1 --runs 20 -o " + d.path.string()) == 0);
  const auto summary = slurp(d / "decomposition_summary.csv");
  CHECK(summary.find("unavailable") != std::string::npos);

  TempDir e;
  REQUIRE(run("decompose -c " + kConfigs + "/linear_benchmark.yaml --paths 20 --runs 5 -o " + e.path.string()) == 0);
  CHECK(fs::exists(e.path / "bound_checks.csv"));
  CHECK(slurp(e / "decomposition_summary.csv").find("unavailable") == std::string::npos);
}

TEST_CASE("eval defaults to 30 runs") {
  TempDir d;
  REQUIRE(run("eval -c " + kConfigs + "/classic.yaml -o " + d.path.string()) == 0);
  CHECK(lines(d / "run_costs.csv").size() == 1 + 30);
  CHECK(lines(d / "evaluation.csv").size() == 2);
}

TEST_CASE("train then evaluate the checkpoint") {
  TempDir d, e;
  write_file(d / "toy.yaml",
             "tier_count: 1\n"
             "demand: {kind: constant, value: 4}\n"
             "policy: {kind: categorical}\n"
             "training: {demand_source: scenario, group_size: 4, eval_runs: 5}\n");
  REQUIRE(run("train -c " + (d / "toy.yaml") + " --steps 3 -o " + (d / "out")) == 0);
  CHECK(lines(d / "out/training_log.csv").size() == 1 + 3);
  const auto ck = nlohmann::json::parse(slurp(d / "out/checkpoint.json"));
  CHECK(ck.at("policy") == "categorical");
  CHECK(lines(d / "out/evaluation.csv").size() == 3);
  REQUIRE(run("eval -c " + (d / "toy.yaml") + " --runs 4 --checkpoint " + (d / "out/checkpoint.json") + " -o " +
              e.path.string()) == 0);
  CHECK(lines(e / "run_costs.csv").size() == 5);
}

TEST_CASE("manifest replay is byte-identical") {
  TempDir a, b;
  REQUIRE(run("ensemble -c " + kConfigs + "/classic.yaml --runs 4 --seed 3 -o " + a.path.string()) == 0);
  REQUIRE(run("ensemble --manifest " + (a / "manifest.json") + " -o " + b.path.string()) == 0);
  for (const char* f : {"orders.csv", "variance.csv", "metrics.csv", "boxplot.csv", "manifest.json"})
    CHECK(slurp(a / f) == slurp(b / f));
  // A manifest only replays the command that wrote it.
  CHECK(run("simulate --manifest " + (a / "manifest.json") + " -o " + (b / "x")) == 2);
}

TEST_CASE("unreachable remote agent in fail mode exits with code 4") {
  TempDir d;
  write_file(d / "remote.yaml",
             "tier_count: 1\n"
             "horizon: 3\n"
             "policy: {kind: remote, endpoint: 'http://127.0.0.1:1/decide', retries: 0, timeout_ms: 200,"
             " fallback: fail}\n");
  CHECK(run("ensemble -c " + (d / "remote.yaml") + " --runs 2 -o " + (d / "out")) == 4);
}

TEST_CASE("report writes bounds and gains") {
  TempDir d;
  REQUIRE(run("report -c " + kConfigs + "/linear_benchmark.yaml -o " + d.path.string()) == 0);
  CHECK(lines(d / "bounds.csv").size() > 1);
  CHECK(lines(d / "gains.csv").size() > 1);
}
