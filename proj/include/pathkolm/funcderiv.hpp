#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pathkolm/kolmogorov.hpp"

namespace pathkolm {

/// nu_t(gamma): a non-anticipative functional of a path on [0, t].
using PathFunctional = std::function<double(double t, const ForwardPath& gamma)>;

/// Central difference in the final sample of gamma on [0, t] only (component i, 0-based).
double vertical_derivative(const PathFunctional& nu, const ForwardPath& gamma, double t, int i,
                           const BumpScheme& scheme);
Vector vertical_gradient(const PathFunctional& nu, const ForwardPath& gamma, double t, const BumpScheme& scheme);
/// Three-point stencil in the final sample.
double second_vertical_derivative(const PathFunctional& nu, const ForwardPath& gamma, double t, int i,
                                  const BumpScheme& scheme);
/// Forward difference [nu_{t+h}(gamma_{t,h}) - nu_t(gamma_t)] / h along the flat extension.
double horizontal_derivative(const PathFunctional& nu, const ForwardPath& gamma, double t, const BumpScheme& scheme);

/// [u(t, y + h dir) - u(t, y - h dir)] / (2h) per path. Both evaluations
/// must come from the same seeds; otherwise throws CouplingError.
MCEstimate frechet_directional(const ValueSampler& u, double t, const WindowPair& pair, const WindowPair& dir,
                               double h);
/// [u(y + h dir) - 2 u(y) + u(y - h dir)] / h^2 per path, same coupling contract.
MCEstimate frechet_second(const ValueSampler& u, double t, const WindowPair& pair, const WindowPair& dir, double h);

/// One side-by-side comparison of an identity between path derivatives of nu
/// and Frechet derivatives of u.
struct IdentityCheck {
  std::string identity;
  MCEstimate lhs;
  MCEstimate rhs;
  /// lhs - rhs per path
  MCEstimate gap;

  nlohmann::json to_json() const;
};

struct ThmKolmReport {
  /// "vertical_i" for each component, then "horizontal".
  std::vector<IdentityCheck> checks;
  BumpScheme scheme;
  GridSpec grid;
  double t = 0.0;

  const IdentityCheck& find(const std::string& identity) const;
  nlohmann::json to_json() const;
};

/// Vertical identity D_i nu_t(gamma) = D u(t, y)(e_i, 0) and horizontal
/// identity D_t nu_t(gamma) = du/dt + Du(t, y)(0, (L_t gamma)'_+), with
/// y = lift of gamma at t. All evaluations share noise; horizontal
/// differences use the antithetic partner on [t, t + h_t).
ThmKolmReport thm_kolm_check(const SDEConfig& config, const FunctionalSpec& spec, const TerminalSpec& tspec,
                             const AnalyticPath& gamma, double t, const BumpScheme& scheme, const McOptions& opts);

/// One level of a refinement study of an identity gap.
struct RefinementLevel {
  double h = 0.0;
  double dt = 0.0;
  double gap = 0.0;
  double std_error = 0.0;
};

struct ErrorConstantFit {
  /// Fitted from the first level: max(0, |gap| - 3 se) / (h + dt).
  double c = 0.0;
  /// Every level satisfies |gap| <= 3 se + slack * c (h + dt).
  bool stable = false;
  std::vector<bool> level_ok;
};

ErrorConstantFit fit_error_constant(const std::vector<RefinementLevel>& levels, double slack = 2.0);

}  // namespace pathkolm
