#include "pathkolm/funcderiv.hpp"

#include <cmath>

#include "pathkolm/io.hpp"

namespace pathkolm {

namespace {

ForwardPath truncate(const ForwardPath& gamma, double t) {
  const int k = gamma.grid().node_index(t);
  if (gamma.size() < k + 1) throw DomainError("path is not defined up to t");
  return ForwardPath(gamma.grid(), gamma.values().topRows(k + 1), gamma.interpolation());
}

void check_coupled(const PathSamples& a, const PathSamples& b) {
  if (a.root_seed != b.root_seed || a.values.size() != b.values.size())
    throw CouplingError("bumped evaluations do not share noise");
}

}  // namespace

double vertical_derivative(const PathFunctional& nu, const ForwardPath& gamma, double t, int i,
                           const BumpScheme& scheme) {
  scheme.validate();
  const double h = scheme.h_v;
  return (nu(t, vertical_bump(gamma, t, i, h)) - nu(t, vertical_bump(gamma, t, i, -h))) / (2.0 * h);
}

Vector vertical_gradient(const PathFunctional& nu, const ForwardPath& gamma, double t, const BumpScheme& scheme) {
  Vector out(gamma.grid().dimension());
  for (int i = 0; i < out.size(); ++i) out[i] = vertical_derivative(nu, gamma, t, i, scheme);
  return out;
}

double second_vertical_derivative(const PathFunctional& nu, const ForwardPath& gamma, double t, int i,
                                  const BumpScheme& scheme) {
  scheme.validate();
  const double h = scheme.h_v;
  const double up = nu(t, vertical_bump(gamma, t, i, h));
  const double mid = nu(t, truncate(gamma, t));
  const double down = nu(t, vertical_bump(gamma, t, i, -h));
  return (up - 2.0 * mid + down) / (h * h);
}

double horizontal_derivative(const PathFunctional& nu, const ForwardPath& gamma, double t, const BumpScheme& scheme) {
  scheme.validate();
  const double h = scheme.h_t(gamma.grid());
  return (nu(t + h, flat_extension(gamma, t, h)) - nu(t, truncate(gamma, t))) / h;
}

MCEstimate frechet_directional(const ValueSampler& u, double t, const WindowPair& pair, const WindowPair& dir,
                               double h) {
  if (!(h > 0.0)) throw DomainError("directional step must be positive");
  const PathSamples up = u(t, pair + h * dir);
  const PathSamples down = u(t, pair - h * dir);
  check_coupled(up, down);
  return make_estimate((up.values - down.values) / (2.0 * h), up.root_seed);
}

MCEstimate frechet_second(const ValueSampler& u, double t, const WindowPair& pair, const WindowPair& dir, double h) {
  if (!(h > 0.0)) throw DomainError("directional step must be positive");
  const PathSamples up = u(t, pair + h * dir);
  const PathSamples mid = u(t, pair);
  const PathSamples down = u(t, pair - h * dir);
  check_coupled(up, mid);
  check_coupled(up, down);
  return make_estimate((up.values - 2.0 * mid.values + down.values) / (h * h), up.root_seed);
}

nlohmann::json IdentityCheck::to_json() const {
  return {{"identity", identity},
          {"lhs", pathkolm::to_json(lhs)},
          {"rhs", pathkolm::to_json(rhs)},
          {"gap", gap.mean},
          {"stderr", gap.std_error}};
}

const IdentityCheck& ThmKolmReport::find(const std::string& identity) const {
  for (const auto& c : checks)
    if (c.identity == identity) return c;
  throw DomainError("no identity named " + identity);
}

nlohmann::json ThmKolmReport::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j = c.to_json();
    j["params"] = {{"h_v", scheme.h_v}, {"h_t", scheme.h_t(grid)}, {"grid", pathkolm::to_json(grid)}, {"t", t}};
    out.push_back(std::move(j));
  }
  return out;
}

ThmKolmReport thm_kolm_check(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                             const AnalyticPath& gamma, double t, const BumpScheme& scheme, const McOptions& opts) {
  scheme.validate();
  const GridSpec& grid = config.grid;
  const int d = grid.dimension();
  const int k = grid.node_index(t);
  const int m = scheme.h_t_steps;
  if (k < 1 || k + m > grid.steps()) throw DomainError("t must be an interior node with t + h_t <= T");

  const ForwardPath path = gamma.sample(grid, t);
  const WindowPair y = lift_path(path, t);
  const double h = scheme.h_v;
  const double ht = scheme.h_t(grid);
  const WindowPair slope =
      WindowPair::unchecked(grid, Vector::Zero(d), gamma.extension_derivative(grid, t), PairClass::endpoint_jump);

  std::vector<Scenario> scenarios{
      {k, y, std::nullopt},
      {k, y, std::make_pair(k, k + m)},
      {k + m, lift_path(flat_extension(path, t, ht), t + ht), std::nullopt},
      {k + m, y, std::nullopt},
      {k, y + h * slope, std::nullopt},
      {k, y - h * slope, std::nullopt},
  };
  for (int i = 0; i < d; ++i) {
    const WindowPair e = WindowPair::endpoint_only(grid, Vector::Unit(d, i));
    scenarios.push_back({k, lift_path(vertical_bump(path, t, i, h), t), std::nullopt});
    scenarios.push_back({k, lift_path(vertical_bump(path, t, i, -h), t), std::nullopt});
    scenarios.push_back({k, y + h * e, std::nullopt});
    scenarios.push_back({k, y - h * e, std::nullopt});
  }
  const CoupledSamples s = coupled_samples(config, spec, tspec, scenarios, opts);
  const auto& v = s.values;
  const std::uint64_t root = s.root_seed;

  ThmKolmReport report{{}, scheme, grid, t};
  for (int i = 0; i < d; ++i) {
    const int c = 6 + 4 * i;
    const Eigen::VectorXd lhs = (v.col(c) - v.col(c + 1)) / (2.0 * h);
    const Eigen::VectorXd rhs = (v.col(c + 2) - v.col(c + 3)) / (2.0 * h);
    report.checks.push_back({"vertical_" + std::to_string(i + 1), make_estimate(lhs, root), make_estimate(rhs, root),
                             make_estimate(lhs - rhs, root)});
  }
  const Eigen::VectorXd base = 0.5 * (v.col(0) + v.col(1));
  const Eigen::VectorXd lhs = (v.col(2) - base) / ht;
  const Eigen::VectorXd rhs = (v.col(3) - base) / ht + (v.col(4) - v.col(5)) / (2.0 * h);
  report.checks.push_back(
      {"horizontal", make_estimate(lhs, root), make_estimate(rhs, root), make_estimate(lhs - rhs, root)});
  return report;
}

ErrorConstantFit fit_error_constant(const std::vector<RefinementLevel>& levels, double slack) {
  if (levels.empty()) throw DomainError("refinement study needs at least one level");
  ErrorConstantFit fit;
  const auto& first = levels.front();
  fit.c = std::max(0.0, std::abs(first.gap) - 3.0 * first.std_error) / (first.h + first.dt);
  fit.stable = true;
  for (const auto& level : levels) {
    const bool ok = std::abs(level.gap) <= 3.0 * level.std_error + slack * fit.c * (level.h + level.dt) + 1e-12;
    fit.level_ok.push_back(ok);
    fit.stable = fit.stable && ok;
  }
  return fit;
}

}  // namespace pathkolm
