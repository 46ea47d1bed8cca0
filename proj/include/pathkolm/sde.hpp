#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>

#include "pathkolm/estimate.hpp"
#include "pathkolm/functionals.hpp"
#include "pathkolm/mollify.hpp"

namespace pathkolm {

/// Grid, diagonal noise loadings sigma_1..sigma_d and the start node t0.
struct SDEConfig {
  SDEConfig(GridSpec grid, Vector sigma, int t0 = 0);
  /// Same sigma in every component.
  SDEConfig(GridSpec grid, double sigma, int t0 = 0);

  GridSpec grid;
  Vector sigma;
  int t0 = 0;
  /// Euler-Maruyama aborts once any |X_i| exceeds this.
  double divergence_bound = 1e8;

  SDEConfig starting_at(int node) const;
};

/// Gaussian increments dW_k over [t_k, t_{k+1}), k = 0..N-1, N(0, dt) per component.
///
/// Rows are generated from the last one backwards down to `from_node`, so two
/// draws with the same seed agree on every row they both hold whatever their
/// start. Rows before `from_node` are zero.
class NoiseDraw {
 public:
  NoiseDraw(const GridSpec& grid, std::uint64_t seed, int from_node = 0);
  static NoiseDraw from_increments(const GridSpec& grid, std::uint64_t seed, Samples<double> increments,
                                   int from_node = 0);

  const GridSpec& grid() const noexcept { return grid_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int from_node() const noexcept { return from_; }
  const Samples<double>& increments() const noexcept { return increments_; }

  /// Sums blocks of `factor` increments: the same Brownian path on a grid with N / factor steps.
  NoiseDraw coarsened(int factor) const;
  /// Copy with the increments of rows [first, last) negated.
  NoiseDraw negated(int first, int last) const;

 private:
  NoiseDraw(GridSpec grid, std::uint64_t seed, int from_node, Samples<double> increments)
      : grid_(grid), seed_(seed), from_(from_node), increments_(std::move(increments)) {}

  GridSpec grid_;
  std::uint64_t seed_;
  int from_;
  Samples<double> increments_;
};

/// Exact drift B or its smoothed version B_n.
struct Drift {
  Drift(FunctionalSpec spec) : spec(std::move(spec)) {}  // NOLINT: implicit on purpose
  Drift(FunctionalSpec spec, std::shared_ptr<const Mollifier> mollifier)
      : spec(std::move(spec)), mollifier(std::move(mollifier)) {}

  FunctionalSpec spec;
  std::shared_ptr<const Mollifier> mollifier;

  Vector value(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window) const;
  Vector d1(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window, const PointRef& hx,
            const WindowRef& hw) const;
  Vector d2(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window, const PointRef& hx,
            const WindowRef& hw, const PointRef& lx, const WindowRef& lw) const;
};

/// States on nodes t0..end of a path-dependent process together with its
/// pre-t0 history, kept as one buffer of rows for times t0 - T, ..., end.
/// Lifted states are windows into that buffer.
class Trajectory {
 public:
  Trajectory(const WindowPair& initial, int start_node);

  const GridSpec& grid() const noexcept { return grid_; }
  int start_node() const noexcept { return start_; }
  int end_node() const noexcept { return end_; }
  const Samples<double>& buffer() const noexcept { return buffer_; }

  Vector state(int k) const { return buffer_.row(row(k)).transpose(); }
  auto state_view(int k) const { return buffer_.row(row(k)).transpose(); }
  auto window_view(int k) const { return buffer_.middleRows(row(k) - grid_.steps(), grid_.steps()); }

  /// Y(t_k) = (X(t_k), X on [t_k - T, t_k)).
  WindowPair lifted_state(int k) const;

  /// X on [0, t_end], with nodes before t0 taken from the initial window.
  ForwardPath forward_path() const;

  /// CSV node_time,X_1..X_d over t0..end.
  void write_csv(std::ostream& os) const;

  /// Appends X(t_{end + 1}).
  void push(const Eigen::Ref<const Vector>& next);

 private:
  int row(int k) const;

  GridSpec grid_;
  int start_;
  int end_;
  PairClass initial_class_;
  std::optional<int> initial_jump_;
  Samples<double> buffer_;
};

/// Euler-Maruyama for dX = b_t(X_t) dt + sigma dW from (t0, y0):
/// X(t_{k+1}) = X(t_k) + b_hat(t_k, Y(t_k)) dt + sigma dW_k.
/// Runs to `end_node` (default N). Throws SimulationDiverged on non-finite
/// values or when |X| exceeds the configured bound.
Trajectory simulate(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                    std::optional<int> end_node = std::nullopt);

/// Euler-Maruyama driver bound to one configuration and drift. Catalog drifts
/// are advanced with O(1) running sums per step; smoothed drifts fall back to
/// evaluating B_n on the lifted state.
class Simulator {
 public:
  Simulator(const SDEConfig& config, const Drift& drift);

  Trajectory run(const WindowPair& y0, int start_node, const NoiseDraw& noise, int end_node) const;

 private:
  SDEConfig config_;
  Drift drift_;
};

/// Z^{t0}(t) = (sigma (W(t) - W(t0)), sigma (W((t + xi) v t0) - W(t0))), class C_hat.
WindowPair stochastic_convolution(const SDEConfig& config, const NoiseDraw& noise, double t0, double t);

enum class ConvolutionRule {
  /// Reproduces the Euler increments exactly.
  left_point,
  /// Trapezoid in time; differs from Euler by O(dt).
  trapezoid,
};

/// F^{t0}(t) = (int_{t0}^t b_s ds, xi -> int_{t0}^{(t + xi) v t0} b_s ds) along theta, class C_hat.
WindowPair deterministic_convolution(const SDEConfig& config, const Drift& drift, const Trajectory& theta, double t0,
                                     double t, ConvolutionRule rule = ConvolutionRule::trapezoid);

/// Y(t) - [e^{(t - t0)A} y0 + F^{t0}(t) + Z^{t0}(t)].
WindowPair mild_residual(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                         const Trajectory& y, double t, ConvolutionRule rule = ConvolutionRule::trapezoid);

/// First variation xi(t) k: the linearisation of the Euler map in the
/// direction k, xi_{j+1} = e^{dt A} xi_j + DB(t_j, Y_j) xi_j dt.
Trajectory first_variation(const SDEConfig& config, const Drift& drift, const Trajectory& y, const WindowPair& k);
Trajectory first_variation(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                           const WindowPair& k);

/// Second variation eta(t)(h, k):
/// eta_{j+1} = e^{dt A} eta_j + [DB(t_j, Y_j) eta_j + D^2B(t_j, Y_j)(xi_j h, xi_j k)] dt, eta_{t0} = 0.
Trajectory second_variation(const SDEConfig& config, const Drift& drift, const Trajectory& y, const Trajectory& xi_h,
                            const Trajectory& xi_k);
Trajectory second_variation(const SDEConfig& config, const Drift& drift, const WindowPair& y0, const NoiseDraw& noise,
                            const WindowPair& h, const WindowPair& k);

}  // namespace pathkolm
