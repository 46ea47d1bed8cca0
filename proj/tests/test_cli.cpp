#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "pathkolm/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("pathkolm_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string cli() {
  const char* p = std::getenv("PATHKOLM_CLI");
  REQUIRE(p != nullptr);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + cli() + " " + args + " > " + (scratch() / "stdout.txt").string() + " 2> " +
                          (scratch() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* simulate_zero = R"({
  "scenario": "simulate",
  "T": 1.0, "d": 1, "sigma": 1.0,
  "drift": {"kind": "zero"},
  "terminal": {"kind": "quadratic"},
  "path": {"shape": "cosine", "offset": 0.2, "amplitude": 0.5, "omega": 2.0},
  "schedule": [{"dt": 0.03125, "n": 3}],
  "seed": 11
})";

}  // namespace

TEST_CASE("simulate writes a trajectory CSV and exits 0") {
  const fs::path cfg = write_config("sim.json", simulate_zero);
  const fs::path out = scratch() / "sim";
  CHECK(run("run " + cfg.string() + " --check --out " + out.string()) == 0);
  const std::string csv = slurp(out / "simulate.csv");
  CHECK(csv.rfind("level,seed_index,node_time,X_1\n", 0) == 0);
  const json j = json::parse(slurp(out / "simulate.json"));
  CHECK(j.at("seed") == 11);
  CHECK(j.at("version").is_string());
  CHECK(j.at("checks")[0].at("pass") == true);
}

TEST_CASE("zmoment reports pairs and a fitted slope") {
  const fs::path cfg = write_config("zm.json", R"({
    "scenario": "zmoment", "sigma": 1.0,
    "schedule": [{"dt": 0.0125, "n": 2000}],
    "lags": [0.1, 0.2, 0.4]
  })");
  const fs::path out = scratch() / "zm";
  CHECK(run("run " + cfg.string() + " --out " + out.string()) == 0);
  const json j = json::parse(slurp(out / "zmoment.json"));
  CHECK(j.at("levels")[0].at("slope").is_number());
  const std::string csv = slurp(out / "zmoment.csv");
  CHECK(csv.rfind("level,dt,lag,moment,stderr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("malformed configs exit 2 with a diagnostic") {
  const fs::path syntax = write_config("bad1.json", "{\n  \"scenario\": \"simulate\",\n  \"T\": ,\n}");
  CHECK(run("run " + syntax.string()) == 2);
  CHECK(slurp(scratch() / "stderr.txt").find("line 3") != std::string::npos);

  const fs::path field = write_config("bad2.json", R"({"scenario": "simulate", "schedule": [{"dt": 0.3}]})");
  CHECK(run("run " + field.string()) == 2);
  CHECK(slurp(scratch() / "stderr.txt").find("schedule[0].dt") != std::string::npos);

  const fs::path unknown = write_config("bad3.json", R"({"scenario": "simulate", "shedule": []})");
  CHECK(run("run " + unknown.string()) == 2);
  CHECK(slurp(scratch() / "stderr.txt").find("shedule") != std::string::npos);

  const fs::path builtin =
      write_config("bad4.json", R"({"scenario": "simulate", "drift": {"kind": "integral", "g": "exp"},
                                    "schedule": [{"dt": 0.25}]})");
  CHECK(run("run " + builtin.string()) == 2);
  CHECK(slurp(scratch() / "stderr.txt").find("drift.g") != std::string::npos);

  CHECK(run("run " + (scratch() / "missing.json").string()) == 2);
}

TEST_CASE("divergence exits 3") {
  const fs::path cfg = write_config("div.json", R"({
    "scenario": "simulate", "sigma": 0.0,
    "drift": {"kind": "endpoint_linear", "c": 10000.0},
    "path": {"shape": "constant", "value": 1.0},
    "schedule": [{"dt": 0.1, "n": 1}]
  })");
  CHECK(run("run " + cfg.string() + " --out " + (scratch() / "div").string()) == 3);
}

TEST_CASE("failed checks exit 4 only under --check") {
  // A linear flow has no first-order remainder, so the fitted slope is undefined.
  const fs::path cfg = write_config("var.json", R"({
    "scenario": "variation", "sigma": 1.0,
    "drift": {"kind": "zero"},
    "schedule": [{"dt": 0.0625, "n": 2}]
  })");
  const std::string out = " --out " + (scratch() / "var").string();
  CHECK(run("run " + cfg.string() + out) == 0);
  CHECK(run("run " + cfg.string() + " --check" + out) == 4);
  CHECK(slurp(scratch() / "stdout.txt").find("FAIL first_variation_slope") != std::string::npos);
}

TEST_CASE("replay is byte-identical across runs and thread counts") {
  const fs::path cfg = write_config("rpd.json", R"({
    "scenario": "residual-pd", "sigma": 1.0,
    "drift": {"kind": "integral", "g": "sin"},
    "terminal": {"kind": "endpoint", "f0": "cos"},
    "path": {"shape": "cosine", "offset": 0.3, "amplitude": 0.5, "omega": 2.0},
    "t": 0.5,
    "schedule": [{"dt": 0.03125, "h": 0.01, "n": 300}],
    "seed": 5
  })");
  const fs::path a = scratch() / "a";
  const fs::path b = scratch() / "b";
  CHECK(run("run " + cfg.string() + " --out " + a.string() + " --threads 1") == 0);
  CHECK(run("run " + cfg.string() + " --out " + b.string() + " --threads 3") == 0);
  CHECK(slurp(a / "residual-pd.json") == slurp(b / "residual-pd.json"));
  CHECK(slurp(a / "residual-pd.csv") == slurp(b / "residual-pd.csv"));

  const fs::path c = scratch() / "c";
  CHECK(run("run " + cfg.string() + " --out " + c.string(), "PATHKOLM_SEED=99") == 0);
  CHECK(json::parse(slurp(c / "residual-pd.json")).at("seed") == 99);
  CHECK(run("run " + cfg.string() + " --seed 7 --out " + c.string(), "PATHKOLM_SEED=99") == 0);
  CHECK(json::parse(slurp(c / "residual-pd.json")).at("seed") == 7);
  CHECK(run("run " + cfg.string() + " --out " + c.string(), "PATHKOLM_SEED=abc") == 2);
}

TEST_CASE("columns subcommand lists every scenario") {
  CHECK(run("columns") == 0);
  const std::string text = slurp(scratch() / "stdout.txt");
  for (const auto& name : pathkolm::scenario_names()) CHECK(text.find("`" + name + "`") != std::string::npos);
  CHECK(text == pathkolm::columns_markdown());
}

TEST_CASE("config parsing in process") {
  const auto c = pathkolm::parse_config_text(simulate_zero);
  CHECK(c.scenario == "simulate");
  CHECK(c.schedule.size() == 1);
  CHECK(c.seed == 11);
  CHECK_THROWS_AS(pathkolm::parse_config(json{{"scenario", "simulate"}}), pathkolm::ConfigError);
  CHECK_THROWS_AS(pathkolm::parse_config(json{{"scenario", "bogus"}, {"schedule", json::array()}}),
                  pathkolm::ConfigError);
}
