#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pathkolm/analytic_path.hpp"
#include "pathkolm/functionals.hpp"

namespace pathkolm {

/// Version string baked in at configure time (git describe).
std::string version();

/// One refinement level: time step, bump size and sample count.
struct Level {
  double dt = 0.0;
  double h = 0.0;
  long n = 0;
};

struct ExperimentConfig {
  std::string scenario;
  double horizon = 1.0;
  int dimension = 1;
  Vector sigma;
  FunctionalSpec drift;
  TerminalSpec terminal;
  /// Initial path: gamma on [0, t] for path functionals, or the window of the start pair.
  AnalyticPath path = AnalyticPath::constant(0.0);
  double t = 0.0;
  double t1 = 0.5;
  int h_t_steps = 4;
  long n_inner = 2000;
  std::uint64_t seed = 1;
  std::vector<Level> schedule;
  /// Smoothing index for the u_n variant of residual scenarios.
  std::optional<int> mollify;
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  std::vector<double> lags{0.05, 0.1, 0.2, 0.4};
  std::vector<int> mollify_n{8, 32, 128};
  std::vector<double> jump_points{-0.3, -0.55};
  std::vector<AnalyticPath> windows;
  AnalyticPath direction = AnalyticPath::cosine(1.0, 0.5, 2.0);
  AnalyticPath direction2 = AnalyticPath::linear(0.5, 1.0);
};

/// Every scenario name the runner accepts.
const std::vector<std::string>& scenario_names();

/// Parses and validates a config document. Throws ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Parses text; syntax errors become ConfigError with a line and column.
ExperimentConfig parse_config_text(const std::string& text);

struct RunOptions {
  bool check = false;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Report {
  /// Payload: results, seeds, version. Independent of the thread count.
  nlohmann::json json;
  std::string csv;
  /// Extra CSV files keyed by file suffix.
  std::vector<std::pair<std::string, std::string>> extra_csv;
  std::vector<CheckResult> checks;

  bool passed() const;
};

/// Executes the scenario. The seed is taken from opts.seed, then from the
/// PATHKOLM_SEED environment variable, then from the config.
Report run_experiment(ExperimentConfig config, const RunOptions& opts);

/// CSV columns per scenario as a markdown section.
std::string columns_markdown();

}  // namespace pathkolm
