#include "pathkolm/kolmogorov.hpp"

#include <algorithm>
#include <cmath>

#include "pathkolm/io.hpp"

namespace pathkolm {

nlohmann::json to_json(const MCEstimate& e) {
  return {{"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n_samples}, {"root_seed", e.root_seed}};
}

namespace {

// Drift and terminal as seen by the estimators: exact, or smoothed by J_n.
struct Model {
  Model(const SDEConfig& config_, const FunctionalSpec& spec, const TerminalSpec& tspec_, std::optional<int> n)
      : config(config_),
        mollifier(n ? std::make_shared<const Mollifier>(config_.grid, *n) : nullptr),
        drift(spec, mollifier),
        tspec(tspec_),
        simulator(config_, drift) {}

  double terminal(const PointRef& x, const WindowRef& window) const {
    if (mollifier) return approx_terminal_value(tspec, *mollifier, x, window);
    return terminal_value(tspec, config.grid, x, window);
  }

  double terminal(const Trajectory& y) const {
    const int n = config.grid.steps();
    return terminal(y.state_view(n), y.window_view(n));
  }

  double run(const Scenario& s, const NoiseDraw& noise) const {
    return terminal(simulator.run(s.start, s.start_node, noise, config.grid.steps()));
  }

  SDEConfig config;
  std::shared_ptr<const Mollifier> mollifier;
  Drift drift;
  TerminalSpec tspec;
  Simulator simulator;
};

void check_options(const McOptions& opts) {
  if (opts.n < 2) throw DomainError("Monte Carlo needs at least two paths");
  if (opts.threads < 1) throw DomainError("thread count must be positive");
}

Eigen::MatrixXd run_scenarios(const Model& model, const std::vector<Scenario>& scenarios, const McOptions& opts) {
  const GridSpec& grid = model.config.grid;
  int first = grid.steps();
  for (const auto& s : scenarios) {
    if (!(s.start.grid() == grid)) throw DomainError("scenario start on another grid");
    if (s.start_node < 0 || s.start_node > grid.steps()) throw DomainError("scenario start outside the grid");
    first = std::min(first, s.start_node);
  }
  Eigen::MatrixXd values(opts.n, static_cast<Eigen::Index>(scenarios.size()));
  parallel_for(opts.n, opts.threads, [&](long i) {
    const NoiseDraw noise(grid, mix_seed(opts.root_seed, static_cast<std::uint64_t>(i)), first);
    for (std::size_t c = 0; c < scenarios.size(); ++c) {
      const auto& s = scenarios[c];
      values(i, static_cast<Eigen::Index>(c)) =
          s.negate ? model.run(s, noise.negated(s.negate->first, s.negate->second)) : model.run(s, noise);
    }
  });
  return values;
}

MCEstimate estimate_of(const Eigen::VectorXd& v, std::uint64_t root) { return make_estimate(v, root); }

}  // namespace

CoupledSamples coupled_samples(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                               const std::vector<Scenario>& scenarios, const McOptions& opts) {
  check_options(opts);
  const Model model(config, spec, tspec, opts.mollify_n);
  return {opts.root_seed, run_scenarios(model, scenarios, opts)};
}

PathSamples sample_u(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec, double t,
                     const WindowPair& pair, const McOptions& opts) {
  const int k = config.grid.node_index(t);
  const CoupledSamples s = coupled_samples(config, spec, tspec, {Scenario{k, pair, std::nullopt}}, opts);
  return {s.root_seed, s.values.col(0)};
}

MCEstimate mc_u(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec, double t,
                const WindowPair& pair, const McOptions& opts) {
  return sample_u(config, spec, tspec, t, pair, opts).estimate();
}

MCEstimate mc_nu(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                 const ForwardPath& gamma, double t, const McOptions& opts) {
  return mc_u(config, spec, tspec, t, lift_path(gamma, t), opts);
}

ValueSampler make_value_sampler(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                const McOptions& opts) {
  return [=](double t, const WindowPair& pair) { return sample_u(config, spec, tspec, t, pair, opts); };
}

std::vector<MCEstimate> mollification_gap(const SDEConfig& config, const FunctionalSpec& spec,
                                          const TerminalSpec& tspec, double t, const WindowPair& pair,
                                          const std::vector<int>& n_list, const McOptions& opts) {
  check_options(opts);
  const int k = config.grid.node_index(t);
  const Model exact(config, spec, tspec, std::nullopt);
  std::vector<Model> smoothed;
  smoothed.reserve(n_list.size());
  for (int n : n_list) smoothed.emplace_back(config, spec, tspec, n);

  const Scenario start{k, pair, std::nullopt};
  Eigen::MatrixXd diff(opts.n, static_cast<Eigen::Index>(n_list.size()));
  parallel_for(opts.n, opts.threads, [&](long i) {
    const NoiseDraw noise(config.grid, mix_seed(opts.root_seed, static_cast<std::uint64_t>(i)), k);
    const double base = exact.run(start, noise);
    for (std::size_t c = 0; c < smoothed.size(); ++c)
      diff(i, static_cast<Eigen::Index>(c)) = smoothed[c].run(start, noise) - base;
  });
  std::vector<MCEstimate> out;
  for (Eigen::Index c = 0; c < diff.cols(); ++c) out.push_back(estimate_of(diff.col(c), opts.root_seed));
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json ChapmanReport::to_json() const {
  return {{"direct", pathkolm::to_json(direct)},
          {"nested", pathkolm::to_json(nested)},
          {"gap", gap},
          {"combined_stderr", combined_stderr},
          {"n_outer", n_outer},
          {"n_inner", n_inner}};
}

ChapmanReport chapman_kolmogorov_check(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                       double t0, double t1, const WindowPair& pair, long n_outer, long n_inner,
                                       std::uint64_t root_seed, int threads) {
  if (!spec.smooth()) throw UnsupportedDerivativeError("Chapman-Kolmogorov check needs a smooth drift");
  const GridSpec& grid = config.grid;
  const int k0 = grid.node_index(t0);
  const int k1 = grid.node_index(t1);
  if (!(k0 < k1)) throw DomainError("Chapman-Kolmogorov check needs t0 < t1");
  if (n_outer < 2 || n_inner < 1) throw DomainError("sample counts too small");

  const std::uint64_t direct_root = mix_seed(root_seed, 1);
  const std::uint64_t outer_root = mix_seed(root_seed, 2);
  const std::uint64_t inner_root = mix_seed(root_seed, 3);
  const Model model(config, spec, tspec, std::nullopt);

  ChapmanReport report;
  report.n_outer = n_outer;
  report.n_inner = n_inner;
  report.direct = mc_u(config, spec, tspec, t0, pair, {n_outer, direct_root, threads, std::nullopt});

  Eigen::VectorXd nested(n_outer);
  parallel_for(n_outer, threads, [&](long i) {
    const NoiseDraw outer(grid, mix_seed(outer_root, static_cast<std::uint64_t>(i)), k0);
    const Trajectory y = model.simulator.run(pair, k0, outer, k1);
    const Scenario inner_start{k1, y.lifted_state(k1), std::nullopt};
    const std::uint64_t root_i = mix_seed(inner_root, static_cast<std::uint64_t>(i));
    double acc = 0.0;
    for (long j = 0; j < n_inner; ++j)
      acc += model.run(inner_start, NoiseDraw(grid, mix_seed(root_i, static_cast<std::uint64_t>(j)), k1));
    nested[i] = acc / static_cast<double>(n_inner);
  });
  report.nested = make_estimate(nested, outer_root);
  report.gap = report.nested.mean - report.direct.mean;
  report.combined_stderr = std::hypot(report.direct.std_error, report.nested.std_error);
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json ResidualReport::to_json() const {
  return {{"term_horizontal", pathkolm::to_json(term_horizontal)},
          {"term_drift_dot_vertical", pathkolm::to_json(term_drift_dot_vertical)},
          {"term_half_trace", pathkolm::to_json(term_half_trace)},
          {"total", pathkolm::to_json(total)},
          {"h_v", scheme.h_v},
          {"h_t", scheme.h_t(grid)},
          {"grid", pathkolm::to_json(grid)},
          {"t", t}};
}

ResidualReport residual_pathdependent(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                      const AnalyticPath& gamma, double t, const BumpScheme& scheme,
                                      const McOptions& opts) {
  if (!spec.smooth()) throw UnsupportedDerivativeError("residual needs a differentiable drift");
  scheme.validate();
  if (std::abs(gamma.derivative(0.0)) > 1e-12) throw DomainError("path must satisfy gamma'(0) = 0");
  const GridSpec& grid = config.grid;
  const int d = grid.dimension();
  const int k = grid.node_index(t);
  const int m = scheme.h_t_steps;
  if (k < 1 || k + m > grid.steps()) throw DomainError("t must be an interior node with t + h_t <= T");

  const ForwardPath path = gamma.sample(grid, t);
  const double h = scheme.h_v;
  const double ht = scheme.h_t(grid);
  const WindowPair y = lift_path(path, t);

  std::vector<Scenario> scenarios{
      {k, y, std::nullopt},
      {k, y, std::make_pair(k, k + m)},
      {k + m, lift_path(flat_extension(path, t, ht), t + ht), std::nullopt},
  };
  for (int i = 0; i < d; ++i) {
    scenarios.push_back({k, lift_path(vertical_bump(path, t, i, h), t), std::nullopt});
    scenarios.push_back({k, lift_path(vertical_bump(path, t, i, -h), t), std::nullopt});
  }
  check_options(opts);
  const Model model(config, spec, tspec, opts.mollify_n);
  const Eigen::MatrixXd v = run_scenarios(model, scenarios, opts);
  const Vector b = model.drift.value(grid, k, y.endpoint(), y.window());

  Eigen::VectorXd horizontal = (v.col(2) - 0.5 * (v.col(0) + v.col(1))) / ht;
  Eigen::VectorXd drift_term = Eigen::VectorXd::Zero(opts.n);
  Eigen::VectorXd trace_term = Eigen::VectorXd::Zero(opts.n);
  for (int i = 0; i < d; ++i) {
    const auto up = v.col(3 + 2 * i);
    const auto down = v.col(4 + 2 * i);
    drift_term += b[i] * (up - down) / (2.0 * h);
    trace_term += 0.5 * config.sigma[i] * config.sigma[i] * (up - 2.0 * v.col(0) + down) / (h * h);
  }
  const Eigen::VectorXd total = horizontal + drift_term + trace_term;

  ResidualReport report{estimate_of(horizontal, opts.root_seed),
                        estimate_of(drift_term, opts.root_seed),
                        estimate_of(trace_term, opts.root_seed),
                        estimate_of(total, opts.root_seed),
                        scheme,
                        grid,
                        t};
  report.total.mean =
      report.term_horizontal.mean + report.term_drift_dot_vertical.mean + report.term_half_trace.mean;
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json IntegratedReport::to_json() const {
  return {{"lhs", pathkolm::to_json(lhs)},
          {"rhs", pathkolm::to_json(rhs)},
          {"gap", pathkolm::to_json(gap)},
          {"quadrature_bias", quadrature_bias},
          {"t", t},
          {"h", h},
          {"grid", pathkolm::to_json(grid)}};
}

namespace {

void check_domain(const WindowPair& pair, const Samples<double>& phi_prime) {
  const GridSpec& grid = pair.grid();
  const int n = grid.steps();
  // Re-validate continuity of the join x = phi(0-).
  WindowPair::continuous(grid, pair.endpoint(), pair.window());
  if (phi_prime.rows() != n || phi_prime.cols() != grid.dimension())
    throw DomainError("window derivative must be N x d");
  if (!phi_prime.allFinite()) throw DomainError("window derivative is not finite");
  const double scale = 1.0 + phi_prime.cwiseAbs().maxCoeff();
  const double dt = grid.dt();
  double worst = 0.0;
  for (int j = 0; j + 1 < n; ++j) {
    const auto slope = (pair.window().row(j + 1) - pair.window().row(j)) / dt;
    worst = std::max(worst, (slope - 0.5 * (phi_prime.row(j) + phi_prime.row(j + 1))).cwiseAbs().maxCoeff());
  }
  const auto last = (pair.endpoint().transpose() - pair.window().row(n - 1)) / dt;
  worst = std::max(worst, (last - phi_prime.row(n - 1)).cwiseAbs().maxCoeff() / 2.0);
  if (worst > 1e-2 * scale) throw DomainError("window derivative is inconsistent with the window");
}

}  // namespace

IntegratedReport residual_integrated(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                     const WindowPair& pair, const Samples<double>& phi_prime, double t, double h,
                                     const McOptions& opts) {
  if (!spec.smooth()) throw UnsupportedDerivativeError("residual needs a differentiable drift");
  if (!(h > 0.0)) throw DomainError("directional step must be positive");
  check_domain(pair, phi_prime);
  check_options(opts);
  const GridSpec& grid = config.grid;
  const int d = grid.dimension();
  const int n = grid.steps();
  const int k = grid.node_index(t);
  if (n - k < 8) throw DomainError("need at least eight grid steps between t and T");

  const Model model(config, spec, tspec, opts.mollify_n);
  auto midpoints = [&](int cells) {
    std::vector<int> nodes;
    for (int c = 0; c < cells; ++c)
      nodes.push_back(static_cast<int>(std::lround(k + (c + 0.5) * (n - k) / static_cast<double>(cells))));
    return nodes;
  };
  const std::vector<int> q8 = midpoints(8);
  const std::vector<int> q4 = midpoints(4);

  std::vector<Scenario> scenarios{{k, pair, std::nullopt}};
  const int per_node = 3 + 2 * d;
  auto add_node = [&](int s) {
    const Vector b = model.drift.value(grid, s, pair.endpoint(), pair.window());
    const WindowPair dir = WindowPair::unchecked(grid, b, phi_prime, PairClass::endpoint_jump);
    scenarios.push_back({s, pair, std::nullopt});
    scenarios.push_back({s, pair + h * dir, std::nullopt});
    scenarios.push_back({s, pair - h * dir, std::nullopt});
    for (int j = 0; j < d; ++j) {
      const WindowPair e = WindowPair::endpoint_only(grid, Vector::Unit(d, j));
      scenarios.push_back({s, pair + h * e, std::nullopt});
      scenarios.push_back({s, pair - h * e, std::nullopt});
    }
  };
  for (int s : q8) add_node(s);
  for (int s : q4) add_node(s);
  const Eigen::MatrixXd v = run_scenarios(model, scenarios, opts);

  auto integrand = [&](int slot) -> Eigen::VectorXd {
    const int c = 1 + slot * per_node;
    Eigen::VectorXd out = (v.col(c + 1) - v.col(c + 2)) / (2.0 * h);
    for (int j = 0; j < d; ++j)
      out += 0.5 * config.sigma[j] * config.sigma[j] *
             (v.col(c + 3 + 2 * j) - 2.0 * v.col(c) + v.col(c + 4 + 2 * j)) / (h * h);
    return out;
  };
  const double span = grid.horizon() - t;
  Eigen::VectorXd rhs8 = Eigen::VectorXd::Zero(opts.n);
  Eigen::VectorXd rhs4 = Eigen::VectorXd::Zero(opts.n);
  for (int c = 0; c < 8; ++c) rhs8 += integrand(c) * (span / 8.0);
  for (int c = 0; c < 4; ++c) rhs4 += integrand(8 + c) * (span / 4.0);

  const double phi_y = model.terminal(pair.endpoint(), pair.window());
  const Eigen::VectorXd lhs = v.col(0).array() - phi_y;

  IntegratedReport report{estimate_of(lhs, opts.root_seed),
                          estimate_of(rhs8, opts.root_seed),
                          estimate_of(lhs - rhs8, opts.root_seed),
                          0.0,
                          t,
                          h,
                          grid};
  report.quadrature_bias = std::abs(report.rhs.mean - estimate_of(rhs4, opts.root_seed).mean) / 3.0;
  return report;
}

IntegratedReport residual_integrated(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                     const AnalyticPath& window, double t, double h, const McOptions& opts) {
  return residual_integrated(config, spec, tspec, window.window_pair(config.grid),
                             window.window_derivative(config.grid), t, h, opts);
}

// ---------------------------------------------------------------------------

TimeLipschitzReport time_lipschitz(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                   const WindowPair& pair, const McOptions& opts) {
  const GridSpec& grid = config.grid;
  std::vector<Scenario> scenarios;
  for (int k = 0; k < grid.steps(); ++k) scenarios.push_back({k, pair, std::nullopt});
  const CoupledSamples s = coupled_samples(config, spec, tspec, scenarios, opts);
  TimeLipschitzReport report;
  for (Eigen::Index c = 0; c < s.values.cols(); ++c) report.values.push_back(make_estimate(s.values.col(c), s.root_seed));
  for (std::size_t k = 0; k + 1 < report.values.size(); ++k)
    report.lipschitz =
        std::max(report.lipschitz, std::abs(report.values[k + 1].mean - report.values[k].mean) / grid.dt());
  return report;
}

}  // namespace pathkolm
