#include "pathkolm/sde.hpp"

#include <cmath>
#include <ostream>
#include <random>

#include "pathkolm/io.hpp"

namespace pathkolm {

SDEConfig::SDEConfig(GridSpec grid_, Vector sigma_, int t0_) : grid(grid_), sigma(std::move(sigma_)), t0(t0_) {
  if (sigma.size() != grid.dimension()) throw DomainError("sigma needs one entry per component");
  if (!sigma.allFinite() || (sigma.array() < 0.0).any()) throw DomainError("sigma entries must be finite and >= 0");
  if (t0 < 0 || t0 >= grid.steps()) throw DomainError("start node must satisfy 0 <= t0 < N");
}

SDEConfig::SDEConfig(GridSpec grid_, double sigma_, int t0_)
    : SDEConfig(grid_, Vector::Constant(grid_.dimension(), sigma_), t0_) {}

SDEConfig SDEConfig::starting_at(int node) const {
  SDEConfig out(grid, sigma, node);
  out.divergence_bound = divergence_bound;
  return out;
}

// ---------------------------------------------------------------------------

NoiseDraw::NoiseDraw(const GridSpec& grid, std::uint64_t seed, int from_node)
    : grid_(grid), seed_(seed), from_(from_node), increments_(Samples<double>::Zero(grid.steps(), grid.dimension())) {
  if (from_node < 0 || from_node > grid.steps()) throw DomainError("noise start outside the grid");
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(grid.dt()));
  for (int k = grid.steps() - 1; k >= from_node; --k)
    for (int i = 0; i < grid.dimension(); ++i) increments_(k, i) = normal(engine);
}

NoiseDraw NoiseDraw::from_increments(const GridSpec& grid, std::uint64_t seed, Samples<double> increments,
                                     int from_node) {
  if (increments.rows() != grid.steps() || increments.cols() != grid.dimension())
    throw DomainError("increments must be N x d");
  return NoiseDraw(grid, seed, from_node, std::move(increments));
}

NoiseDraw NoiseDraw::coarsened(int factor) const {
  if (factor < 1 || grid_.steps() % factor != 0 || from_ % factor != 0)
    throw DomainError("coarsening factor must divide the grid and the start node");
  const GridSpec coarse(grid_.horizon(), grid_.steps() / factor, grid_.dimension());
  Samples<double> inc = Samples<double>::Zero(coarse.steps(), coarse.dimension());
  for (int k = 0; k < coarse.steps(); ++k)
    for (int q = 0; q < factor; ++q) inc.row(k) += increments_.row(k * factor + q);
  return NoiseDraw(coarse, seed_, from_ / factor, std::move(inc));
}

NoiseDraw NoiseDraw::negated(int first, int last) const {
  if (first < 0 || last > grid_.steps() || first > last) throw DomainError("negated range outside the grid");
  NoiseDraw out = *this;
  out.increments_.middleRows(first, last - first) *= -1.0;
  return out;
}

// ---------------------------------------------------------------------------

Vector Drift::value(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window) const {
  if (mollifier) return approx_drift_value(spec, *mollifier, k, x, window);
  return lifted_drift(spec, grid, k, x, window);
}

Vector Drift::d1(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window, const PointRef& hx,
                 const WindowRef& hw) const {
  if (mollifier) return approx_drift_d1(spec, *mollifier, k, x, window, hx, hw);
  return lifted_drift_d1(spec, grid, k, x, window, hx, hw);
}

Vector Drift::d2(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window, const PointRef& hx,
                 const WindowRef& hw, const PointRef& lx, const WindowRef& lw) const {
  if (mollifier) return approx_drift_d2(spec, *mollifier, k, x, window, hx, hw, lx, lw);
  return lifted_drift_d2(spec, grid, k, x, window, hx, hw, lx, lw);
}

// ---------------------------------------------------------------------------

Trajectory::Trajectory(const WindowPair& initial, int start_node)
    : grid_(initial.grid()),
      start_(start_node),
      end_(start_node),
      initial_class_(initial.pair_class()),
      initial_jump_(initial.jump_at()) {
  const int n = grid_.steps();
  if (start_node < 0 || start_node > n) throw DomainError("trajectory start outside the grid");
  buffer_.resize(2 * n + 1 - start_node, grid_.dimension());
  buffer_.topRows(n) = initial.window();
  buffer_.row(n) = initial.endpoint().transpose();
}

int Trajectory::row(int k) const {
  if (k < start_ || k > end_) throw DomainError("node outside the simulated range");
  return grid_.steps() + k - start_;
}

void Trajectory::push(const Eigen::Ref<const Vector>& next) {
  if (end_ >= grid_.steps()) throw DomainError("trajectory already reaches T");
  ++end_;
  buffer_.row(grid_.steps() + end_ - start_) = next.transpose();
}

WindowPair Trajectory::lifted_state(int k) const {
  const auto [cls, jump] = shifted_class(initial_class_, initial_jump_, k - start_, grid_.steps());
  return WindowPair::unchecked(grid_, state(k), window_view(k), cls, jump);
}

ForwardPath Trajectory::forward_path() const {
  const int n = grid_.steps();
  return ForwardPath(grid_, buffer_.middleRows(n - start_, end_ + 1));
}

void Trajectory::write_csv(std::ostream& os) const {
  const ForwardPath path(grid_, buffer_.middleRows(grid_.steps(), end_ - start_ + 1));
  write_path_csv(os, path, "X", start_);
}

// ---------------------------------------------------------------------------

namespace {

enum class Stream { integral, running_sup, endpoint_linear, zero, generic };

Stream stream_kind(const Drift& drift) {
  if (drift.mollifier) return Stream::generic;
  if (std::holds_alternative<IntegralDrift>(drift.spec.kind)) return Stream::integral;
  if (std::holds_alternative<RunningSupDrift>(drift.spec.kind)) return Stream::running_sup;
  if (std::holds_alternative<EndpointLinearDrift>(drift.spec.kind)) return Stream::endpoint_linear;
  if (std::holds_alternative<ZeroDrift>(drift.spec.kind)) return Stream::zero;
  return Stream::generic;
}

void check_finite(const Vector& v, int node, double bound, const char* what) {
  if (!v.allFinite()) throw SimulationDiverged(node, std::string(what) + " is not finite");
  if (v.cwiseAbs().maxCoeff() > bound) throw SimulationDiverged(node, std::string(what) + " exceeds the bound");
}

}  // namespace

Simulator::Simulator(const SDEConfig& config, const Drift& drift) : config_(config), drift_(drift) {
  if (drift_.mollifier && !(drift_.mollifier->grid() == config_.grid))
    throw DomainError("mollifier grid differs from the simulation grid");
}

Trajectory Simulator::run(const WindowPair& y0, int start_node, const NoiseDraw& noise, int end_node) const {
  const GridSpec& grid = config_.grid;
  const int n = grid.steps();
  const double dt = grid.dt();
  if (!(y0.grid() == grid) || !(noise.grid() == grid)) throw DomainError("initial pair or noise on another grid");
  if (end_node < start_node || end_node > n) throw DomainError("end node outside [t0, N]");
  if (noise.from_node() > start_node) throw DomainError("noise does not cover the simulated range");

  Trajectory out(y0, start_node);
  const Samples<double>& buf = out.buffer();
  const Stream kind = stream_kind(drift_);
  const Eigen::ArrayXd sigma = config_.sigma.array();

  Vector acc = Vector::Zero(grid.dimension());
  const ScalarFunction* g = nullptr;
  if (kind == Stream::integral) {
    g = &std::get<IntegralDrift>(drift_.spec.kind).g;
    for (int r = n - start_node; r < n; ++r) acc += buf.row(r).transpose().unaryExpr(g->value) * dt;
  } else if (kind == Stream::running_sup) {
    acc = buf.middleRows(n - start_node, start_node + 1).colwise().maxCoeff().transpose();
  }

  Vector b(grid.dimension());
  Vector next(grid.dimension());
  for (int k = start_node; k < end_node; ++k) {
    const int r = n + k - start_node;
    switch (kind) {
      case Stream::integral:
      case Stream::running_sup:
        b = acc;
        break;
      case Stream::endpoint_linear:
        b = std::get<EndpointLinearDrift>(drift_.spec.kind).c * buf.row(r).transpose();
        break;
      case Stream::zero:
        b.setZero();
        break;
      case Stream::generic:
        b = drift_.value(grid, k, buf.row(r).transpose(), buf.middleRows(r - n, n));
        break;
    }
    if (!b.allFinite()) throw SimulationDiverged(k, "drift is not finite");
    next = buf.row(r).transpose() + b * dt;
    next.array() += sigma * noise.increments().row(k).transpose().array();
    check_finite(next, k + 1, config_.divergence_bound, "state");
    out.push(next);
    if (kind == Stream::integral) {
      acc += buf.row(r).transpose().unaryExpr(g->value) * dt;
    } else if (kind == Stream::running_sup) {
      acc = acc.cwiseMax(next);
    }
  }
  return out;
}

Trajectory simulate(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                    std::optional<int> end_node) {
  return Simulator(config, drift).run(y0, config.t0, noise, end_node.value_or(config.grid.steps()));
}

// ---------------------------------------------------------------------------

namespace {

// (C[k - k0], xi -> C[max(m, k0) - k0]) for cumulative values C on nodes k0..k.
WindowPair from_cumulative(const GridSpec& grid, const std::vector<Vector>& cum, int k0, int k) {
  const int n = grid.steps();
  Samples<double> window(n, grid.dimension());
  for (int j = 0; j < n; ++j) {
    const int m = std::max(k - n + j, k0);
    window.row(j) = cum[m - k0].transpose();
  }
  return WindowPair::unchecked(grid, cum[k - k0], std::move(window), PairClass::continuous);
}

}  // namespace

WindowPair stochastic_convolution(const SDEConfig& config, const NoiseDraw& noise, double t0, double t) {
  const GridSpec& grid = config.grid;
  const int k0 = grid.node_index(t0);
  const int k = grid.node_index(t);
  if (k < k0) throw DomainError("stochastic convolution needs t0 <= t");
  if (noise.from_node() > k0) throw DomainError("noise does not cover [t0, t]");
  std::vector<Vector> cum(k - k0 + 1, Vector::Zero(grid.dimension()));
  for (int m = k0; m < k; ++m)
    cum[m - k0 + 1] = cum[m - k0] + Vector(config.sigma.array() * noise.increments().row(m).transpose().array());
  return from_cumulative(grid, cum, k0, k);
}

WindowPair deterministic_convolution(const SDEConfig& config, const Drift& drift, const Trajectory& theta, double t0,
                                     double t, ConvolutionRule rule) {
  const GridSpec& grid = config.grid;
  const int k0 = grid.node_index(t0);
  const int k = grid.node_index(t);
  if (k < k0) throw DomainError("deterministic convolution needs t0 <= t");
  if (theta.start_node() > k0 || theta.end_node() < k) throw DomainError("trajectory does not cover [t0, t]");
  const double dt = grid.dt();
  std::vector<Vector> b;
  b.reserve(k - k0 + 1);
  for (int m = k0; m <= k; ++m) {
    if (m == k && rule == ConvolutionRule::left_point) break;
    b.push_back(drift.value(grid, m, theta.state_view(m), theta.window_view(m)));
  }
  std::vector<Vector> cum(k - k0 + 1, Vector::Zero(grid.dimension()));
  for (int m = k0; m < k; ++m) {
    const Vector step = rule == ConvolutionRule::left_point ? Vector(b[m - k0] * dt)
                                                            : Vector(0.5 * (b[m - k0] + b[m - k0 + 1]) * dt);
    cum[m - k0 + 1] = cum[m - k0] + step;
  }
  return from_cumulative(grid, cum, k0, k);
}

WindowPair mild_residual(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                         const Trajectory& y, double t, ConvolutionRule rule) {
  const double t0 = config.grid.time(y.start_node());
  const int k = config.grid.node_index(t);
  return y.lifted_state(k) - semigroup_shift(y0, t - t0) - deterministic_convolution(config, drift, y, t0, t, rule) -
         stochastic_convolution(config, noise, t0, t);
}

// ---------------------------------------------------------------------------

Trajectory first_variation(const SDEConfig& config, const Drift& drift, const Trajectory& y, const WindowPair& k) {
  if (!drift.spec.smooth()) throw UnsupportedDerivativeError("first variation needs a differentiable drift");
  const GridSpec& grid = config.grid;
  Trajectory xi(k, y.start_node());
  for (int j = y.start_node(); j < y.end_node(); ++j) {
    const Vector db = drift.d1(grid, j, y.state_view(j), y.window_view(j), xi.state_view(j), xi.window_view(j));
    xi.push(xi.state(j) + db * grid.dt());
  }
  return xi;
}

Trajectory first_variation(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                           const WindowPair& k) {
  return first_variation(config, drift, simulate(config, drift, y0, noise), k);
}

Trajectory second_variation(const SDEConfig& config, const Drift& drift, const Trajectory& y, const Trajectory& xi_h,
                            const Trajectory& xi_k) {
  if (!drift.spec.smooth()) throw UnsupportedDerivativeError("second variation needs a differentiable drift");
  const GridSpec& grid = config.grid;
  Trajectory eta(WindowPair::zero(grid), y.start_node());
  for (int j = y.start_node(); j < y.end_node(); ++j) {
    const Vector db = drift.d1(grid, j, y.state_view(j), y.window_view(j), eta.state_view(j), eta.window_view(j));
    const Vector d2b = drift.d2(grid, j, y.state_view(j), y.window_view(j), xi_h.state_view(j), xi_h.window_view(j),
                                xi_k.state_view(j), xi_k.window_view(j));
    eta.push(eta.state(j) + (db + d2b) * grid.dt());
  }
  return eta;
}

Trajectory second_variation(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                            const WindowPair& h, const WindowPair& k) {
  const Trajectory y = simulate(config, drift, y0, noise);
  return second_variation(config, drift, y, first_variation(config, drift, y, h), first_variation(config, drift, y, k));
}

}  // namespace pathkolm
