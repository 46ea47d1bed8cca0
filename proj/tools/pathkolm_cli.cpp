#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pathkolm/errors.hpp"
#include "pathkolm/runner.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_diverged = 3;
constexpr int exit_check = 4;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

int run(const std::string& config_path, const pathkolm::RunOptions& opts, const std::string& out_dir, bool check) {
  std::ifstream is(config_path);
  if (!is) {
    std::cerr << "config: cannot open " << config_path << '\n';
    return exit_config;
  }
  std::stringstream text;
  text << is.rdbuf();
  const pathkolm::ExperimentConfig config = pathkolm::parse_config_text(text.str());
  const pathkolm::Report report = pathkolm::run_experiment(config, opts);

  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / (config.scenario + ".json"), report.json.dump(2) + "\n");
  write_file(dir / (config.scenario + ".csv"), report.csv);
  for (const auto& [suffix, csv] : report.extra_csv) write_file(dir / (config.scenario + "_" + suffix + ".csv"), csv);

  for (const auto& c : report.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  std::cout << "wrote " << (dir / (config.scenario + ".json")).string() << '\n';
  return check && !report.passed() ? exit_check : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Path-dependent SDE experiments: simulation, value functions and Kolmogorov residual checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pathkolm::version());

  std::string config_path;
  std::string out_dir = ".";
  bool check = false;
  std::uint64_t seed = 0;
  int threads = 1;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run_cmd->add_option("config", config_path, "Config file")->required();
  run_cmd->add_flag("--check", check, "Exit 4 when an acceptance threshold fails");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Root seed, overrides PATHKOLM_SEED and the config");
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* columns_cmd = app.add_subcommand("columns", "Print the CSV columns of every scenario as markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  if (*columns_cmd) {
    std::cout << pathkolm::columns_markdown();
    return 0;
  }

  pathkolm::RunOptions opts;
  opts.check = check;
  opts.threads = threads;
  if (*seed_opt) opts.seed = seed;
  try {
    return run(config_path, opts, out_dir, check);
  } catch (const pathkolm::ConfigError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return exit_config;
  } catch (const pathkolm::SimulationDiverged& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return exit_diverged;
  } catch (const pathkolm::GridAlignmentError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return exit_config;
  } catch (const pathkolm::DomainError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return exit_config;
  } catch (const pathkolm::UnsupportedDerivativeError& e) {
    std::cerr << "config: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
