#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "pathkolm/analytic_path.hpp"
#include "pathkolm/bump.hpp"
#include "pathkolm/sde.hpp"

namespace pathkolm {

nlohmann::json to_json(const MCEstimate& e);

struct McOptions {
  long n = 10000;
  std::uint64_t root_seed = 1;
  int threads = 1;
  /// When set, estimates u_n built from B_n and Phi_n instead of u.
  std::optional<int> mollify_n;
};

/// One start of a coupled family: every scenario of path i is driven by the
/// noise seeded with mix_seed(root_seed, i).
struct Scenario {
  int start_node = 0;
  WindowPair start;
  /// Increments on these rows are negated (antithetic partner).
  std::optional<std::pair<int, int>> negate;
};

struct CoupledSamples {
  std::uint64_t root_seed = 0;
  /// n rows, one column per scenario: Phi(Y(T)) (or Phi_n) per path.
  Eigen::MatrixXd values;
};

/// Simulates every scenario on every path with shared noise.
CoupledSamples coupled_samples(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                               const std::vector<Scenario>& scenarios, const McOptions& opts);

/// Per-path Phi(Y^{t,y}(T)).
PathSamples sample_u(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec, double t,
                     const WindowPair& pair, const McOptions& opts);

/// u(t, y) = E[Phi(Y^{t,y}(T))].
MCEstimate mc_u(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec, double t,
                const WindowPair& pair, const McOptions& opts);

/// nu_t(gamma) = u(t, gamma(t), L_t gamma).
MCEstimate mc_nu(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                 const ForwardPath& gamma, double t, const McOptions& opts);

/// Estimates of u that share noise across arguments. Different arguments
/// evaluated through one sampler are coupled path by path.
using ValueSampler = std::function<PathSamples(double t, const WindowPair& pair)>;
ValueSampler make_value_sampler(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                const McOptions& opts);

/// Per-path Phi_n(Y_n(T)) - Phi(Y(T)) for each n, common noise.
std::vector<MCEstimate> mollification_gap(const SDEConfig& config, const FunctionalSpec& spec,
                                          const TerminalSpec& tspec, double t, const WindowPair& pair,
                                          const std::vector<int>& n_list, const McOptions& opts);

// ---------------------------------------------------------------------------

struct ChapmanReport {
  MCEstimate direct;
  MCEstimate nested;
  double gap = 0.0;
  double combined_stderr = 0.0;
  long n_outer = 0;
  long n_inner = 0;

  bool within(double k_sigma) const { return std::abs(gap) <= k_sigma * combined_stderr; }
  nlohmann::json to_json() const;
};

/// u(t0, y) against the average over outer paths of inner estimates of
/// u(t1, Y^{t0,y}(t1)). Direct, outer and inner draws use independent seed streams.
ChapmanReport chapman_kolmogorov_check(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                       double t0, double t1, const WindowPair& pair, long n_outer, long n_inner,
                                       std::uint64_t root_seed, int threads = 1);

struct ResidualReport {
  MCEstimate term_horizontal;
  MCEstimate term_drift_dot_vertical;
  MCEstimate term_half_trace;
  /// mean = sum of the term means; std_error from the per-path totals.
  MCEstimate total;
  BumpScheme scheme;
  GridSpec grid;
  double t = 0.0;

  nlohmann::json to_json() const;
};

/// D_t nu + b . D nu + 1/2 sum_j sigma_j^2 D_j^2 nu at (t, gamma_t), all
/// bumped and extended evaluations sharing noise. The horizontal difference
/// averages the base path with its antithetic partner on [t, t + h_t).
/// Requires gamma'(0) = 0 and a differentiable drift.
ResidualReport residual_pathdependent(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                      const AnalyticPath& gamma, double t, const BumpScheme& scheme,
                                      const McOptions& opts);

struct IntegratedReport {
  /// u(t, y) - Phi(y)
  MCEstimate lhs;
  /// composite midpoint (8 nodes) of <Du, Ay + B> + 1/2 sum sigma_j^2 D^2u(e_j, e_j)
  MCEstimate rhs;
  /// lhs - rhs per path
  MCEstimate gap;
  /// |Q8 - Q4| / 3 with Q4 the 4-node midpoint rule
  double quadrature_bias = 0.0;
  double t = 0.0;
  double h = 0.0;
  GridSpec grid;

  nlohmann::json to_json() const;
};

/// Integrated Kolmogorov identity at y = (x, phi) in the domain of A:
/// phi_prime holds phi' on the window nodes, and (x, phi) must be continuous
/// with phi' consistent with the window increments.
IntegratedReport residual_integrated(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                     const WindowPair& pair, const Samples<double>& phi_prime, double t, double h,
                                     const McOptions& opts);
IntegratedReport residual_integrated(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                     const AnalyticPath& window, double t, double h, const McOptions& opts);

struct TimeLipschitzReport {
  /// u(t_k, y) for k = 0..N-1 under common noise
  std::vector<MCEstimate> values;
  /// max_k |u(t_{k+1}) - u(t_k)| / dt
  double lipschitz = 0.0;
};

TimeLipschitzReport time_lipschitz(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                                   const WindowPair& pair, const McOptions& opts);

}  // namespace pathkolm
