#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "deq/config.hpp"
#include "deq/io.hpp"

using namespace deq;
namespace fs = std::filesystem;

namespace {

const std::string kCli = DEQ_CLI_PATH;
const fs::path kPresets = DEQ_PRESET_DIR;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("deq_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_header(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

void write_json(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

}  // namespace

TEST_CASE("presets all load and validate") {
  for (const auto& entry : fs::directory_iterator(kPresets)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string()));
  }
}

TEST_CASE("pendulum preset grid resolves to k = 20, FN preset to k = 5") {
  const auto pendulum = load_config((kPresets / "pendulum_quantify.json").string());
  CHECK(make_grid(pendulum).steps_per_interval() == 20);
  CHECK(make_grid(pendulum).observation_times().size() == 40);
  const auto fn = load_config((kPresets / "fn_quantify.json").string());
  CHECK(make_grid(fn).steps_per_interval() == 5);
  CHECK(make_grid(fn).observation_times().size() == 91);
}

TEST_CASE("full pendulum tune preset encodes the published grid sizes") {
  const auto config = load_config((kPresets / "pendulum_quantify.json").string());
  REQUIRE(config.tune.has_value());
  CHECK(config.tune->alphas.size() == 151);
  CHECK(config.tune->betas.size() == 129);
  CHECK(config.tune->alphas.size() * config.tune->betas.size() == 19479);
}

TEST_CASE("config validation failures carry field names") {
  const auto dir = fresh_dir("validation");

  SUBCASE("non-divisible step size") {
    write_json(dir / "bad.json", R"({
      "system": "pendulum", "x0": [1.0, 0.0],
      "grid": { "h": 0.3, "times": [1.0, 2.0] },
      "observation": { "H": [[1,0],[0,1]], "noise_cov": [[1,0],[0,1]] }
    })");
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), config_error);
  }
  SUBCASE("missing field is named") {
    write_json(dir / "missing.json", R"({ "system": "pendulum" })");
    try {
      load_config((dir / "missing.json").string());
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(std::string(e.what()).find("x0") != std::string::npos);
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    write_json(dir / "dim.json", R"({
      "system": "pendulum", "x0": [1.0],
      "grid": { "h": 0.05, "times": [1.0, 2.0] },
      "observation": { "H": [[1,0],[0,1]], "noise_cov": [[1,0],[0,1]] }
    })");
    CHECK_THROWS_AS(load_config((dir / "dim.json").string()), config_error);
  }
  SUBCASE("malformed JSON is a config error") {
    write_json(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(load_config((dir / "broken.json").string()), config_error);
  }
}

TEST_CASE("exit codes: 0 success, 2 config error") {
  const auto dir = fresh_dir("exit_codes");
  const auto toy = (kPresets / "pendulum_toy.json").string();
  CHECK(run_cli("simulate --config " + toy + " --out " + (dir / "ok").string()) == 0);
  CHECK(run_cli("simulate --config /nonexistent.json --out " + dir.string()) == 2);
  // quantify without theta_fixed
  write_json(dir / "no_theta.json", R"({
    "system": "pendulum", "x0": [1.0, 0.0],
    "grid": { "h": 0.05, "times": [1.0, 2.0] },
    "observation": { "H": [[3,0],[0,3]], "noise_cov": [[1,0],[0,1]] },
    "theta_true": [3.0]
  })");
  CHECK(run_cli("quantify --config " + (dir / "no_theta.json").string() +
                " --out " + dir.string()) == 2);
  CHECK(run_cli("bogus-subcommand") == 2);
}

TEST_CASE("exit code 3 on filter collapse") {
  const auto dir = fresh_dir("collapse");
  // alpha*beta = 1e5 blows sigma past overflow within the run
  write_json(dir / "collapse.json", R"({
    "system": "pendulum", "x0": [1.0, 0.0], "theta_true": [3.0], "theta_fixed": [3.0],
    "grid": { "h": 0.05, "times": { "start": 1.0, "stop": 10.0, "step": 1.0 } },
    "observation": { "H": [[3,0],[0,3]], "noise_cov": [[1,0],[0,1]] },
    "prior": { "alpha": 100.0, "beta": 1000.0 },
    "particles": 50, "seed": 1
  })");
  CHECK(run_cli("quantify --config " + (dir / "collapse.json").string() +
                " --out " + dir.string()) == 3);
}

TEST_CASE("exit code 4 when every tune cell collapses") {
  const auto dir = fresh_dir("search_fail");
  write_json(dir / "all_collapse.json", R"({
    "system": "pendulum", "x0": [1.0, 0.0], "theta_true": [3.0], "theta_fixed": [3.0],
    "grid": { "h": 0.05, "times": { "start": 1.0, "stop": 10.0, "step": 1.0 } },
    "observation": { "H": [[3,0],[0,3]], "noise_cov": [[1,0],[0,1]] },
    "particles": 50, "seed": 1,
    "tune": { "alpha": [100.0], "beta": [1e6, 2e6], "particles": 30 }
  })");
  CHECK(run_cli("tune --config " + (dir / "all_collapse.json").string() +
                " --out " + dir.string()) == 4);
}

TEST_CASE("simulate emits the declared CSV formats") {
  const auto dir = fresh_dir("simulate");
  REQUIRE(run_cli("simulate --config " + (kPresets / "pendulum_toy.json").string() +
                  " --out " + dir.string()) == 0);
  CHECK(csv_header(dir / "observations.csv") == "t,y1,y2");
  CHECK(csv_header(dir / "exact_errors.csv") == "t,r1,r2");

  // no NaN leaks; every value parses
  for (const auto name : {"observations.csv", "exact_errors.csv"}) {
    std::ifstream in(dir / name);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      for (const auto& field : split_csv_line(line)) {
        CHECK(std::isfinite(parse_number(field)));
      }
    }
  }

  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  for (const auto& f : report.at("files")) {
    CHECK(fs::exists(dir / f.get<std::string>()));
  }
}

TEST_CASE("quantify and infer emit their declared formats") {
  const auto dir = fresh_dir("quantify");
  const auto toy = (kPresets / "pendulum_toy.json").string();
  REQUIRE(run_cli("quantify --config " + toy + " --out " + dir.string() +
                  " --dump-particles") == 0);
  CHECK(csv_header(dir / "sigma_summary.csv") == "t,component,q025,q500,q975,mean");
  CHECK(csv_header(dir / "predictive_band.csv") == "t,component,lower,upper");
  CHECK(csv_header(dir / "particles.csv") == "t,component,particle_index,sigma");

  const auto infer_dir = fresh_dir("infer");
  REQUIRE(run_cli("infer --config " + toy + " --out " + infer_dir.string()) == 0);
  CHECK(csv_header(infer_dir / "theta_posterior.csv") ==
        "param_name,particle_index,value");
  CHECK(fs::exists(infer_dir / "theta_posterior_baseline.csv"));
  const auto summary = nlohmann::json::parse(slurp(infer_dir / "theta_summary.json"));
  CHECK(summary.at("params").size() == 1);
  CHECK(summary.at("params")[0].at("name") == "L");
}

TEST_CASE("tune and rate-check emit their declared formats") {
  const auto dir = fresh_dir("tune");
  const auto toy = (kPresets / "pendulum_toy.json").string();
  REQUIRE(run_cli("tune --config " + toy + " --out " + dir.string()) == 0);
  CHECK(csv_header(dir / "heatmap.csv") == "alpha,beta,loglik");
  CHECK(csv_header(dir / "leaderboard.csv") == "rank,alpha,beta,alpha_times_beta,loglik");
  // 4-cell toy grid: leaderboard has all 4 rows (grid < 10 cells)
  std::ifstream lb(dir / "leaderboard.csv");
  int rows = -1;
  std::string line;
  while (std::getline(lb, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 4);

  const auto rate_dir = fresh_dir("rate");
  REQUIRE(run_cli("rate-check --config " + toy + " --out " + rate_dir.string()) == 0);
  CHECK(csv_header(rate_dir / "rate_check.csv") ==
        "h,mean_sq_sigma,stderr,slope,expected_slope,degenerate_zero");
}

TEST_CASE("config echo round-trips into an identical run") {
  const auto dir_a = fresh_dir("echo_a");
  const auto dir_b = fresh_dir("echo_b");
  const auto toy = (kPresets / "pendulum_toy.json").string();
  REQUIRE(run_cli("quantify --config " + toy + " --out " + dir_a.string()) == 0);
  REQUIRE(run_cli("quantify --config " + (dir_a / "config_echo.json").string() +
                  " --out " + dir_b.string()) == 0);
  CHECK(slurp(dir_a / "sigma_summary.csv") == slurp(dir_b / "sigma_summary.csv"));
  CHECK(slurp(dir_a / "predictive_band.csv") == slurp(dir_b / "predictive_band.csv"));
  CHECK(slurp(dir_a / "config_echo.json") == slurp(dir_b / "config_echo.json"));
}

TEST_CASE("seed override changes outputs, repeat runs do not") {
  const auto dir_a = fresh_dir("seed_a");
  const auto dir_b = fresh_dir("seed_b");
  const auto dir_c = fresh_dir("seed_c");
  const auto toy = (kPresets / "pendulum_toy.json").string();
  REQUIRE(run_cli("simulate --config " + toy + " --out " + dir_a.string()) == 0);
  REQUIRE(run_cli("simulate --config " + toy + " --out " + dir_b.string()) == 0);
  REQUIRE(run_cli("simulate --config " + toy + " --seed 99 --out " + dir_c.string()) == 0);
  CHECK(slurp(dir_a / "observations.csv") == slurp(dir_b / "observations.csv"));
  CHECK(slurp(dir_a / "observations.csv") != slurp(dir_c / "observations.csv"));
}

TEST_CASE("explicit observations file is honored") {
  const auto dir = fresh_dir("obsfile");
  const auto toy = (kPresets / "pendulum_toy.json").string();
  REQUIRE(run_cli("simulate --config " + toy + " --out " + dir.string()) == 0);

  // rewrite the config to point at the emitted observations
  auto root = nlohmann::json::parse(slurp(kPresets / "pendulum_toy.json"));
  root["observations_file"] = (dir / "observations.csv").string();
  write_json(dir / "with_obs.json", root.dump());
  REQUIRE(run_cli("quantify --config " + (dir / "with_obs.json").string() +
                  " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "sigma_summary.csv"));
}
