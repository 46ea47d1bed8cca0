#include "pathkolm/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "pathkolm/funcderiv.hpp"
#include "pathkolm/io.hpp"
#include "pathkolm/kolmogorov.hpp"
#include "pathkolm/mollify.hpp"
#include "pathkolm/sde.hpp"

#ifndef PATHKOLM_VERSION
#define PATHKOLM_VERSION "unknown"
#endif

namespace pathkolm {

using nlohmann::json;

std::string version() { return PATHKOLM_VERSION; }

namespace {

// Column layout of the main CSV of every scenario; also drives the README section.
const std::vector<std::pair<std::string, std::vector<std::string>>>& column_table() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> table{
      {"simulate", {"level", "seed_index", "node_time", "X_1..X_d"}},
      {"residual-pd",
       {"level", "dt", "h_v", "h_t", "n", "horizontal", "horizontal_se", "drift", "drift_se", "half_trace",
        "half_trace_se", "total", "total_se"}},
      {"residual-integrated",
       {"level", "dt", "h", "n", "lhs", "lhs_se", "rhs", "rhs_se", "gap", "gap_se", "quadrature_bias"}},
      {"chapman",
       {"level", "dt", "n_outer", "n_inner", "direct", "direct_se", "nested", "nested_se", "gap", "combined_se"}},
      {"variation", {"level", "dt", "epsilon", "first_error", "second_error"}},
      {"mollify-study", {"level", "dt", "kind", "n", "param", "value", "stderr"}},
      {"zmoment", {"level", "dt", "lag", "moment", "stderr"}},
      {"thm-kolm",
       {"level", "dt", "h_v", "h_t", "n", "identity", "lhs", "lhs_se", "rhs", "rhs_se", "gap", "gap_se"}},
  };
  return table;
}

const std::vector<std::string> assumption2_columns{"level", "clause", "a", "n", "gap"};

std::string join(const std::vector<std::string>& cols) {
  std::string out;
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  return out;
}

// CSV writer with full double precision.
class Csv {
 public:
  explicit Csv(const std::string& header) { os_ << std::setprecision(17) << header << '\n'; }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((os_ << (first ? "" : ",") << values, first = false), ...);
    os_ << '\n';
  }
  std::ostringstream& stream() { return os_; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

std::string header_for(const std::string& scenario, int d) {
  for (const auto& [name, cols] : column_table()) {
    if (name != scenario) continue;
    std::vector<std::string> expanded;
    for (const auto& c : cols) {
      if (c != "X_1..X_d") {
        expanded.push_back(c);
        continue;
      }
      for (int i = 1; i <= d; ++i) expanded.push_back("X_" + std::to_string(i));
    }
    return join(expanded);
  }
  throw ConfigError("scenario", "unknown scenario " + scenario);
}

// ---------------------------------------------------------------------------
// Config parsing

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

long integer(const json& j, const std::string& field) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(field, "expected an integer");
  return j.get<long>();
}

template <typename T, typename F>
std::vector<T> list(const json& j, const std::string& field, F item) {
  if (!j.is_array() || j.empty()) throw ConfigError(field, "expected a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(item(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

AnalyticPath parse_path(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("shape") || !j["shape"].is_string())
    throw ConfigError(field, "expected an object with a string 'shape'");
  const std::string shape = j["shape"].get<std::string>();
  auto get = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError(field + "." + key, "missing");
    return number(j[key], field + "." + key);
  };
  std::set<std::string> allowed;
  AnalyticPath out = AnalyticPath::constant(0.0);
  if (shape == "constant") {
    out = AnalyticPath::constant(get("value"));
    allowed = {"shape", "value"};
  } else if (shape == "cosine") {
    out = AnalyticPath::cosine(get("offset"), get("amplitude"), get("omega"));
    allowed = {"shape", "offset", "amplitude", "omega"};
  } else if (shape == "quadratic") {
    out = AnalyticPath::quadratic(get("offset"), get("a"));
    allowed = {"shape", "offset", "a"};
  } else if (shape == "linear") {
    out = AnalyticPath::linear(get("offset"), get("slope"));
    allowed = {"shape", "offset", "slope"};
  } else {
    throw ConfigError(field + ".shape", "unknown shape '" + shape + "' (constant, cosine, quadratic, linear)");
  }
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(field + "." + key, "unknown field");
  return out;
}

template <typename F>
auto with_prefix(const std::string& prefix, F parse) {
  try {
    return parse();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    if (!e.field().empty() && msg.rfind(e.field() + ": ", 0) == 0) msg.erase(0, e.field().size() + 2);
    throw ConfigError(prefix + (e.field().empty() ? "" : "." + e.field()), msg);
  }
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : column_table()) out.push_back(name);
    return out;
  }();
  return names;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  static const std::set<std::string> known{"scenario", "T",          "d",          "sigma",    "drift",
                                           "terminal", "path",       "t",          "t1",       "h_t_steps",
                                           "n_inner",  "seed",       "schedule",   "mollify",  "epsilons",
                                           "lags",     "mollify_n",  "jump_points", "windows", "direction",
                                           "direction2"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(key, "unknown field");

  ExperimentConfig c;
  if (!j.contains("scenario") || !j["scenario"].is_string()) throw ConfigError("scenario", "missing or not a string");
  c.scenario = j["scenario"].get<std::string>();
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), c.scenario) == names.end())
    throw ConfigError("scenario", "unknown scenario '" + c.scenario + "'");

  if (j.contains("T")) c.horizon = number(j["T"], "T");
  if (!(c.horizon > 0.0)) throw ConfigError("T", "must be positive");
  if (j.contains("d")) c.dimension = static_cast<int>(integer(j["d"], "d"));
  if (c.dimension < 1) throw ConfigError("d", "must be at least 1");

  c.sigma = Vector::Ones(c.dimension);
  if (j.contains("sigma")) {
    const json& s = j["sigma"];
    if (s.is_number()) {
      c.sigma = Vector::Constant(c.dimension, number(s, "sigma"));
    } else {
      const auto v = list<double>(s, "sigma", number);
      if (static_cast<int>(v.size()) != c.dimension) throw ConfigError("sigma", "needs one entry per component");
      c.sigma = Eigen::Map<const Vector>(v.data(), c.dimension);
    }
    if ((c.sigma.array() < 0.0).any()) throw ConfigError("sigma", "entries must be >= 0");
  }

  if (j.contains("drift")) c.drift = with_prefix("drift", [&] { return functional_from_json(j["drift"]); });
  if (j.contains("terminal"))
    c.terminal = with_prefix("terminal", [&] { return terminal_from_json(j["terminal"]); });
  if (auto* e = std::get_if<EndpointLinearDrift>(&c.drift.kind); e && e->c.rows() != c.dimension) {
    if (e->c.rows() != 1) throw ConfigError("drift.c", "matrix size must match d");
    e->c = e->c(0, 0) * Eigen::MatrixXd::Identity(c.dimension, c.dimension);
  }
  if (j.contains("path")) c.path = parse_path(j["path"], "path");
  if (j.contains("t")) c.t = number(j["t"], "t");
  if (j.contains("t1")) c.t1 = number(j["t1"], "t1");
  if (c.t < 0.0 || c.t >= c.horizon) throw ConfigError("t", "must lie in [0, T)");
  if (c.scenario == "chapman" && (c.t1 <= c.t || c.t1 > c.horizon)) throw ConfigError("t1", "must lie in (t, T]");
  if (j.contains("h_t_steps")) c.h_t_steps = static_cast<int>(integer(j["h_t_steps"], "h_t_steps"));
  if (c.h_t_steps < 1) throw ConfigError("h_t_steps", "must be at least 1");
  if (j.contains("n_inner")) c.n_inner = integer(j["n_inner"], "n_inner");
  if (c.n_inner < 1) throw ConfigError("n_inner", "must be positive");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw ConfigError("seed", "expected an integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  if (!j.contains("schedule")) throw ConfigError("schedule", "missing");
  c.schedule = list<Level>(j["schedule"], "schedule", [&](const json& item, const std::string& field) {
    if (!item.is_object()) throw ConfigError(field, "expected an object {dt, h, n}");
    for (const auto& [key, _] : item.items())
      if (key != "dt" && key != "h" && key != "n") throw ConfigError(field + "." + key, "unknown field");
    Level l;
    if (!item.contains("dt")) throw ConfigError(field + ".dt", "missing");
    l.dt = number(item["dt"], field + ".dt");
    l.h = item.contains("h") ? number(item["h"], field + ".h") : 1e-3;
    l.n = item.contains("n") ? integer(item["n"], field + ".n") : 10000;
    if (!(l.dt > 0.0)) throw ConfigError(field + ".dt", "must be positive");
    const double steps = c.horizon / l.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) throw ConfigError(field + ".dt", "T / dt must be an integer");
    if (!(l.h > 0.0)) throw ConfigError(field + ".h", "must be positive");
    if (l.n < 1) throw ConfigError(field + ".n", "must be positive");
    return l;
  });

  if (j.contains("mollify")) {
    const long n = integer(j["mollify"], "mollify");
    if (n < 1) throw ConfigError("mollify", "must be positive");
    c.mollify = static_cast<int>(n);
  }
  if (j.contains("epsilons")) c.epsilons = list<double>(j["epsilons"], "epsilons", number);
  if (j.contains("lags")) c.lags = list<double>(j["lags"], "lags", number);
  if (j.contains("mollify_n"))
    c.mollify_n = list<int>(j["mollify_n"], "mollify_n",
                            [](const json& v, const std::string& f) { return static_cast<int>(integer(v, f)); });
  if (j.contains("jump_points")) c.jump_points = list<double>(j["jump_points"], "jump_points", number);
  if (j.contains("windows")) c.windows = list<AnalyticPath>(j["windows"], "windows", parse_path);
  if (j.contains("direction")) c.direction = parse_path(j["direction"], "direction");
  if (j.contains("direction2")) c.direction2 = parse_path(j["direction2"], "direction2");
  for (double e : c.epsilons)
    if (!(e > 0.0)) throw ConfigError("epsilons", "entries must be positive");
  for (double l : c.lags)
    if (!(l > 0.0) || c.t + l > c.horizon) throw ConfigError("lags", "entries must lie in (0, T - t]");
  for (int n : c.mollify_n)
    if (n < 1) throw ConfigError("mollify_n", "entries must be positive");
  for (double a : c.jump_points)
    if (!(a > -c.horizon && a < 0.0)) throw ConfigError("jump_points", "entries must lie in (-T, 0)");
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    int column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("line " + std::to_string(line) + " column " + std::to_string(column), "JSON syntax error");
  }
  return parse_config(j);
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

// ---------------------------------------------------------------------------
// Scenarios

namespace {

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  std::uint64_t seed;

  GridSpec grid(const Level& l) const {
    return GridSpec(cfg.horizon, static_cast<int>(std::lround(cfg.horizon / l.dt)), cfg.dimension);
  }
  SDEConfig sde(const Level& l) const { return SDEConfig(grid(l), cfg.sigma); }
  std::uint64_t level_seed(std::size_t l) const { return mix_seed(seed, l); }
  McOptions mc(const Level& l, std::size_t index) const {
    return {l.n, level_seed(index), opts.threads, cfg.mollify};
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

json level_json(const Context& ctx, const Level& l, std::size_t index) {
  return {{"level", index}, {"dt", l.dt}, {"h", l.h}, {"n", l.n}, {"root_seed", ctx.level_seed(index)}};
}

void scenario_simulate(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  int finest = 0;
  for (const auto& l : cfg.schedule) finest = std::max(finest, ctx.grid(l).steps());
  const GridSpec fine(cfg.horizon, finest, cfg.dimension);
  for (const auto& l : cfg.schedule)
    if (finest % ctx.grid(l).steps() != 0) throw ConfigError("schedule", "levels must be nested for coupled noise");
  const long seeds = cfg.schedule.front().n;
  const Drift drift(cfg.drift);
  const bool zero = std::holds_alternative<ZeroDrift>(cfg.drift.kind);

  Csv csv(header_for("simulate", cfg.dimension));
  json levels = json::array();
  std::vector<double> residuals;
  double worst_node_residual = 0.0;
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const GridSpec& grid = config.grid;
    const int factor = finest / grid.steps();
    const WindowPair y0 = cfg.path.window_pair(grid);
    const int k0 = grid.node_index(cfg.t);
    Eigen::VectorXd res(seeds);
    std::vector<double> node_worst(static_cast<std::size_t>(seeds), 0.0);
    for (long s = 0; s < seeds; ++s) {
      const NoiseDraw noise = NoiseDraw(fine, mix_seed(ctx.seed, static_cast<std::uint64_t>(s)), 0).coarsened(factor);
      const Trajectory y = Simulator(config, drift).run(y0, k0, noise, grid.steps());
      res[s] = norm_sup(mild_residual(config, drift, y0, noise, y, cfg.horizon, ConvolutionRule::trapezoid));
      if (zero) {
        const int stride = std::max(1, (grid.steps() - k0) / 16);
        for (int k = k0; k <= grid.steps(); k += stride)
          node_worst[s] = std::max(
              node_worst[s], norm_sup(mild_residual(config, drift, y0, noise, y, grid.time(k), ConvolutionRule::left_point)));
      }
      if (s == 0) {
        for (int k = k0; k <= grid.steps(); ++k) {
          csv.stream() << li << ',' << s << ',' << grid.time(k);
          for (int i = 0; i < grid.dimension(); ++i) csv.stream() << ',' << y.state_view(k)[i];
          csv.stream() << '\n';
        }
      }
    }
    for (double w : node_worst) worst_node_residual = std::max(worst_node_residual, w);
    residuals.push_back(res.mean());
    json lj = level_json(ctx, l, li);
    lj["mild_residual_mean"] = res.mean();
    lj["seeds"] = seeds;
    levels.push_back(lj);
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
  if (zero) {
    r.json["max_node_residual"] = worst_node_residual;
    r.checks.push_back({"convolution_decomposition", worst_node_residual <= 1e-12,
                        "max node residual " + fmt(worst_node_residual)});
  } else if (residuals.size() > 1) {
    json ratios = json::array();
    bool ok = true;
    for (std::size_t i = 1; i < residuals.size(); ++i) {
      const double ratio = residuals[i] / residuals[i - 1];
      ratios.push_back(ratio);
      ok = ok && ratio >= 0.4 && ratio <= 0.6;
    }
    r.json["residual_ratios"] = ratios;
    r.checks.push_back({"mild_residual_halving", ok, "ratios " + ratios.dump()});
  }
}

void scenario_residual_pd(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("residual-pd", cfg.dimension));
  json levels = json::array();
  std::vector<ResidualReport> reports;
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const BumpScheme scheme{l.h, cfg.h_t_steps};
    const ResidualReport rep =
        residual_pathdependent(config, cfg.drift, cfg.terminal, cfg.path, cfg.t, scheme, ctx.mc(l, li));
    csv.row(li, l.dt, scheme.h_v, scheme.h_t(config.grid), l.n, rep.term_horizontal.mean,
            rep.term_horizontal.std_error, rep.term_drift_dot_vertical.mean, rep.term_drift_dot_vertical.std_error,
            rep.term_half_trace.mean, rep.term_half_trace.std_error, rep.total.mean, rep.total.std_error);
    json lj = level_json(ctx, l, li);
    lj["report"] = rep.to_json();
    levels.push_back(lj);
    reports.push_back(rep);
  }
  r.json["levels"] = levels;
  r.csv = csv.str();

  // Rounding floor next to 3 se: terms that are exact per path have se near 0.
  constexpr double floor = 1e-8;
  const bool oracle = std::holds_alternative<ZeroDrift>(cfg.drift.kind) &&
                      std::holds_alternative<QuadraticTerminal>(cfg.terminal.kind);
  if (oracle) {
    const double s2 = cfg.sigma.squaredNorm();
    for (std::size_t li = 0; li < reports.size(); ++li) {
      const auto& rep = reports[li];
      auto near = [&](const MCEstimate& e, double target) {
        return std::abs(e.mean - target) <= 3.0 * e.std_error + floor;
      };
      const bool ok = near(rep.term_horizontal, -s2) && near(rep.term_drift_dot_vertical, 0.0) &&
                      near(rep.term_half_trace, s2) && near(rep.total, 0.0);
      r.checks.push_back({"closed_form_terms_level_" + std::to_string(li), ok,
                          "horizontal " + fmt(rep.term_horizontal.mean) + ", trace " +
                              fmt(rep.term_half_trace.mean) + ", total " + fmt(rep.total.mean)});
    }
  } else if (reports.size() > 1) {
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      detail += (i ? ", " : "") + fmt(std::abs(reports[i].total.mean)) + " +- " + fmt(reports[i].total.std_error);
      if (i == 0) continue;
      const double slack = std::hypot(reports[i].total.std_error, reports[i - 1].total.std_error);
      ok = ok && std::abs(reports[i].total.mean) - std::abs(reports[i - 1].total.mean) <= slack;
    }
    r.checks.push_back({"monotone_refinement", ok, "|total| " + detail});
  }
}

void scenario_residual_integrated(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("residual-integrated", cfg.dimension));
  json levels = json::array();
  std::vector<IntegratedReport> reports;
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const IntegratedReport rep =
        residual_integrated(config, cfg.drift, cfg.terminal, cfg.path, cfg.t, l.h, ctx.mc(l, li));
    csv.row(li, l.dt, l.h, l.n, rep.lhs.mean, rep.lhs.std_error, rep.rhs.mean, rep.rhs.std_error, rep.gap.mean,
            rep.gap.std_error, rep.quadrature_bias);
    json lj = level_json(ctx, l, li);
    lj["report"] = rep.to_json();
    levels.push_back(lj);
    reports.push_back(rep);
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
  const double bias = reports.front().quadrature_bias;
  for (std::size_t li = 0; li < reports.size(); ++li) {
    const auto& g = reports[li].gap;
    const double tol = 3.0 * g.std_error + 2.0 * bias + 1e-8;
    r.checks.push_back({"integrated_gap_level_" + std::to_string(li), std::abs(g.mean) <= tol,
                        "gap " + fmt(g.mean) + ", tolerance " + fmt(tol)});
  }
}

void scenario_chapman(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("chapman", cfg.dimension));
  json levels = json::array();
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const ChapmanReport rep =
        chapman_kolmogorov_check(config, cfg.drift, cfg.terminal, cfg.t, cfg.t1, cfg.path.window_pair(config.grid),
                                 l.n, cfg.n_inner, ctx.level_seed(li), ctx.opts.threads);
    csv.row(li, l.dt, rep.n_outer, rep.n_inner, rep.direct.mean, rep.direct.std_error, rep.nested.mean,
            rep.nested.std_error, rep.gap, rep.combined_stderr);
    json lj = level_json(ctx, l, li);
    lj["report"] = rep.to_json();
    levels.push_back(lj);
    r.checks.push_back({"chapman_level_" + std::to_string(li),
                        std::abs(rep.gap) <= 3.0 * rep.combined_stderr + 1e-12,
                        "gap " + fmt(rep.gap) + ", combined se " + fmt(rep.combined_stderr)});
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
}

void scenario_variation(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("variation", cfg.dimension));
  json levels = json::array();
  const Drift drift(cfg.drift);
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const GridSpec& grid = config.grid;
    const int k0 = grid.node_index(cfg.t);
    const WindowPair y0 = cfg.path.window_pair(grid);
    const WindowPair dir = cfg.direction.window_pair(grid);
    const WindowPair dir2 = cfg.direction2.window_pair(grid);
    const SDEConfig at = config.starting_at(k0);
    std::vector<double> first(cfg.epsilons.size(), 0.0);
    std::vector<double> second(cfg.epsilons.size(), 0.0);
    double symmetry = 0.0;
    for (long s = 0; s < l.n; ++s) {
      const NoiseDraw noise(grid, mix_seed(ctx.level_seed(li), static_cast<std::uint64_t>(s)), k0);
      const Trajectory y = simulate(at, drift, y0, noise);
      const Trajectory xi = first_variation(at, drift, y, dir);
      const Trajectory xi2 = first_variation(at, drift, y, dir2);
      const Trajectory eta = second_variation(at, drift, y, xi, xi);
      const Trajectory eta12 = second_variation(at, drift, y, xi, xi2);
      const Trajectory eta21 = second_variation(at, drift, y, xi2, xi);
      symmetry = std::max(symmetry, (eta12.buffer() - eta21.buffer()).cwiseAbs().maxCoeff());
      for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
        const double eps = cfg.epsilons[e];
        const Trajectory bumped = simulate(at, drift, y0 + eps * dir, noise);
        const Samples<double> lin = bumped.buffer() - y.buffer() - eps * xi.buffer();
        first[e] += lin.cwiseAbs().maxCoeff() / static_cast<double>(l.n);
        second[e] += (lin - 0.5 * eps * eps * eta.buffer()).cwiseAbs().maxCoeff() / static_cast<double>(l.n);
      }
    }
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) csv.row(li, l.dt, cfg.epsilons[e], first[e], second[e]);
    const double slope1 = loglog_slope(cfg.epsilons, first);
    const double slope2 = loglog_slope(cfg.epsilons, second);
    json lj = level_json(ctx, l, li);
    lj["first_slope"] = slope1;
    lj["second_slope"] = slope2;
    lj["symmetry_gap"] = symmetry;
    lj["first_error"] = first;
    lj["second_error"] = second;
    levels.push_back(lj);
    const std::string tag = "_level_" + std::to_string(li);
    r.checks.push_back({"first_variation_slope" + tag, slope1 >= 1.8 && slope1 <= 2.2, "slope " + fmt(slope1)});
    r.checks.push_back({"second_variation_slope" + tag, slope2 >= 2.5, "slope " + fmt(slope2)});
    r.checks.push_back({"second_variation_symmetry" + tag, symmetry <= 1e-10, "gap " + fmt(symmetry)});
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

void scenario_mollify(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("mollify-study", cfg.dimension));
  Csv a2(join(assumption2_columns));
  json levels = json::array();
  const std::vector<AnalyticPath> windows = cfg.windows.empty() ? std::vector<AnalyticPath>{cfg.path} : cfg.windows;
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const GridSpec& grid = config.grid;
    std::vector<Mollifier> ms;
    for (int n : cfg.mollify_n) ms.emplace_back(grid, n);
    const std::string tag = "_level_" + std::to_string(li);
    json lj = level_json(ctx, l, li);

    for (std::size_t w = 0; w < windows.size(); ++w) {
      const WindowPair pair = windows[w].window_pair(grid);
      std::vector<double> errs;
      for (const auto& m : ms) {
        errs.push_back((m.apply(pair.window()) - pair.window()).cwiseAbs().maxCoeff());
        csv.row(li, l.dt, "window_error", m.n(), w, errs.back(), 0.0);
      }
      lj["window_error"].push_back(errs);
      r.checks.push_back({"window_error_decreasing_" + std::to_string(w) + tag, strictly_decreasing(errs),
                          json(errs).dump()});
    }

    double jump_sup = 0.0;
    for (double a : cfg.jump_points) {
      Samples<double> ind = Samples<double>::Zero(grid.steps(), grid.dimension());
      for (int j = 0; j < grid.steps(); ++j)
        if (grid.window_time(j) >= a) ind.row(j).setOnes();
      for (const auto& m : ms) {
        const double sup = m.apply(ind).cwiseAbs().maxCoeff();
        jump_sup = std::max(jump_sup, sup);
        csv.row(li, l.dt, "jump_sup", m.n(), a, sup, 0.0);
      }
    }
    lj["jump_sup"] = jump_sup;
    r.checks.push_back({"jump_bound" + tag, jump_sup <= 1.0 + 1e-12, "sup " + fmt(jump_sup)});

    const WindowPair y = cfg.path.window_pair(grid);
    McOptions mc = ctx.mc(l, li);
    mc.mollify_n.reset();
    const auto gaps = mollification_gap(config, cfg.drift, cfg.terminal, cfg.t, y, cfg.mollify_n, mc);
    std::vector<double> abs_gaps;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      csv.row(li, l.dt, "u_gap", cfg.mollify_n[i], 0, gaps[i].mean, gaps[i].std_error);
      abs_gaps.push_back(std::abs(gaps[i].mean));
      lj["u_gap"].push_back(to_json(gaps[i]));
    }
    r.checks.push_back({"u_gap_decreasing" + tag, strictly_decreasing(abs_gaps), json(abs_gaps).dump()});

    if (cfg.drift.smooth()) {
      const auto rep = assumption2_check(cfg.drift, cfg.terminal, cfg.t, y, cfg.mollify_n, cfg.jump_points);
      for (const auto& row : rep.rows) a2.row(li, row.clause, row.a, row.n, row.gap);
      for (const auto& f : rep.flags)
        lj["assumption2_flags"].push_back(
            {{"clause", f.clause}, {"a", f.a}, {"non_monotone", f.non_monotone}, {"non_vanishing", f.non_vanishing}});
    }
    levels.push_back(lj);
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
  r.extra_csv.emplace_back("assumption2", a2.str());
}

void scenario_zmoment(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("zmoment", cfg.dimension));
  json levels = json::array();
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const GridSpec& grid = config.grid;
    const int k0 = grid.node_index(cfg.t);
    for (double lag : cfg.lags) grid.node_index(cfg.t + lag);
    Eigen::MatrixXd m4(l.n, static_cast<Eigen::Index>(cfg.lags.size()));
    parallel_for(l.n, ctx.opts.threads, [&](long i) {
      const NoiseDraw noise(grid, mix_seed(ctx.level_seed(li), static_cast<std::uint64_t>(i)), k0);
      for (std::size_t c = 0; c < cfg.lags.size(); ++c)
        m4(i, static_cast<Eigen::Index>(c)) =
            std::pow(norm_sup(stochastic_convolution(config, noise, cfg.t, cfg.t + cfg.lags[c])), 4);
    });
    std::vector<double> means;
    json lj = level_json(ctx, l, li);
    for (std::size_t c = 0; c < cfg.lags.size(); ++c) {
      const MCEstimate e = make_estimate(m4.col(static_cast<Eigen::Index>(c)), ctx.level_seed(li));
      means.push_back(e.mean);
      csv.row(li, l.dt, cfg.lags[c], e.mean, e.std_error);
      lj["moments"].push_back(to_json(e));
    }
    const double slope = loglog_slope(cfg.lags, means);
    lj["lags"] = cfg.lags;
    lj["slope"] = slope;
    levels.push_back(lj);
    r.checks.push_back(
        {"zmoment_slope_level_" + std::to_string(li), slope >= 1.85 && slope <= 2.15, "slope " + fmt(slope)});
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
}

void scenario_thm_kolm(const Context& ctx, Report& r) {
  const auto& cfg = ctx.cfg;
  Csv csv(header_for("thm-kolm", cfg.dimension));
  json levels = json::array();
  std::map<std::string, std::vector<RefinementLevel>> study;
  for (std::size_t li = 0; li < cfg.schedule.size(); ++li) {
    const Level& l = cfg.schedule[li];
    const SDEConfig config = ctx.sde(l);
    const BumpScheme scheme{l.h, cfg.h_t_steps};
    const ThmKolmReport rep = thm_kolm_check(config, cfg.drift, cfg.terminal, cfg.path, cfg.t, scheme, ctx.mc(l, li));
    for (const auto& c : rep.checks) {
      csv.row(li, l.dt, scheme.h_v, scheme.h_t(config.grid), l.n, c.identity, c.lhs.mean, c.lhs.std_error,
              c.rhs.mean, c.rhs.std_error, c.gap.mean, c.gap.std_error);
      study[c.identity].push_back({l.h, l.dt, c.gap.mean, c.gap.std_error});
    }
    json lj = level_json(ctx, l, li);
    lj["report"] = rep.to_json();
    levels.push_back(lj);
  }
  r.json["levels"] = levels;
  r.csv = csv.str();
  for (const auto& [identity, lv] : study) {
    const ErrorConstantFit fit = fit_error_constant(lv);
    r.json["fitted_constant"][identity] = fit.c;
    r.checks.push_back({"thm_kolm_" + identity, fit.stable, "fitted C " + fmt(fit.c)});
  }
}

std::uint64_t resolve_seed(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.seed) return *opts.seed;
  if (const char* env = std::getenv("PATHKOLM_SEED")) {
    try {
      std::size_t pos = 0;
      const std::string s(env);
      const unsigned long long v = std::stoull(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("PATHKOLM_SEED", "expected an unsigned integer");
    }
  }
  return cfg.seed;
}

}  // namespace

Report run_experiment(ExperimentConfig config, const RunOptions& opts) {
  if (opts.threads < 1) throw ConfigError("threads", "must be positive");
  const Context ctx{config, opts, resolve_seed(config, opts)};
  Report r;
  r.json = {{"scenario", config.scenario},
            {"version", version()},
            {"seed", ctx.seed},
            {"T", config.horizon},
            {"d", config.dimension},
            {"sigma", std::vector<double>(config.sigma.data(), config.sigma.data() + config.sigma.size())},
            {"drift", to_json(config.drift)},
            {"terminal", to_json(config.terminal)},
            {"path", config.path.name()},
            {"t", config.t}};
  if (config.mollify) r.json["mollify"] = *config.mollify;

  const std::string& s = config.scenario;
  if (s == "simulate") scenario_simulate(ctx, r);
  else if (s == "residual-pd") scenario_residual_pd(ctx, r);
  else if (s == "residual-integrated") scenario_residual_integrated(ctx, r);
  else if (s == "chapman") scenario_chapman(ctx, r);
  else if (s == "variation") scenario_variation(ctx, r);
  else if (s == "mollify-study") scenario_mollify(ctx, r);
  else if (s == "zmoment") scenario_zmoment(ctx, r);
  else if (s == "thm-kolm") scenario_thm_kolm(ctx, r);
  else throw ConfigError("scenario", "unknown scenario " + s);

  for (const auto& c : r.checks) r.json["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return r;
}

std::string columns_markdown() {
  std::ostringstream os;
  os << "Each run writes `<scenario>.json` and `<scenario>.csv` into the output directory.\n"
        "Rows of the CSV carry the refinement `level` (index into `schedule`).\n\n"
        "| scenario | CSV columns |\n|---|---|\n";
  for (const auto& [name, cols] : column_table()) os << "| `" << name << "` | `" << join(cols) << "` |\n";
  os << "| `mollify-study` (`mollify-study_assumption2.csv`) | `" << join(assumption2_columns) << "` |\n";
  return os.str();
}

}  // namespace pathkolm
