#pragma once

#include <json.hpp>

#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pathkolm/path_space.hpp"

namespace pathkolm {

using WindowRef = Eigen::Ref<const Samples<double>>;
using PointRef = Eigen::Ref<const Vector>;

/// Named smooth scalar map R -> R with analytic first and second derivatives.
struct ScalarFunction {
  std::string name;
  double (*value)(double) = nullptr;
  double (*d1)(double) = nullptr;
  double (*d2)(double) = nullptr;
  double sup_abs = std::numeric_limits<double>::infinity();
  /// Hoelder exponent of d2 (1 when d2 is Lipschitz).
  double holder = 1.0;
};

/// Looks up a builtin (zero, one, linear, square, sin, cos, tanh, abs_pow_2_5).
/// Throws DomainError for unknown names.
const ScalarFunction& builtin_function(std::string_view name);
std::vector<std::string> builtin_function_names();

// ---------------------------------------------------------------------------
// Drift catalog

/// b_t(gamma) = int_0^t g(gamma(s)) ds, g applied componentwise.
struct IntegralDrift {
  ScalarFunction g;
};

enum class SamplingMap { sum, mean, sin_sum };

/// b_t(gamma) = h_i(gamma(t_1), ..., gamma(t_i)) with i the number of t_j <= t.
struct DiscreteSamplingDrift {
  std::vector<double> times;
  SamplingMap h = SamplingMap::sum;
};

/// Componentwise running maximum of gamma on [0, t]. Not differentiable.
struct RunningSupDrift {};

/// b_t(gamma) = c gamma(t).
struct EndpointLinearDrift {
  Eigen::MatrixXd c;
};

struct ZeroDrift {};

using DriftKind = std::variant<IntegralDrift, DiscreteSamplingDrift, RunningSupDrift, EndpointLinearDrift, ZeroDrift>;

struct FunctionalSpec {
  DriftKind kind = ZeroDrift{};
  /// Hoelder exponent of the second derivative.
  double alpha = 1.0;

  static FunctionalSpec integral(std::string_view g);
  static FunctionalSpec discrete_sampling(std::vector<double> times, SamplingMap h);
  static FunctionalSpec running_sup();
  static FunctionalSpec endpoint_linear(Eigen::MatrixXd c);
  static FunctionalSpec zero();

  bool smooth() const noexcept { return !std::holds_alternative<RunningSupDrift>(kind); }
  std::string kind_name() const;

  /// M_B: sup of |B(t, y)| over [0, T] x D for this grid.
  double sup_bound(const GridSpec& grid) const;

  /// Window coordinates a for which the one-jump convergence property fails
  /// when the drift is evaluated at time t (sampling times t_j map to t_j - t).
  std::vector<double> singular_points(double t) const;
};

// ---------------------------------------------------------------------------
// Terminal catalog

struct EndpointTerminal {
  ScalarFunction f0;
};

/// f(gamma) = |gamma(T)|^2.
struct QuadraticTerminal {};

/// f(gamma) = int_0^T sum_i g(gamma_i(s)) ds + sum_i f0(gamma_i(T)).
struct IntegralPlusEndpointTerminal {
  ScalarFunction g;
  ScalarFunction f0;
};

using TerminalKind = std::variant<EndpointTerminal, QuadraticTerminal, IntegralPlusEndpointTerminal>;

struct TerminalSpec {
  TerminalKind kind = QuadraticTerminal{};

  /// f(gamma) = sum_i f0(gamma_i(T)).
  static TerminalSpec endpoint(std::string_view f0);
  static TerminalSpec quadratic();
  static TerminalSpec integral_plus_endpoint(std::string_view g, std::string_view f0);

  std::string kind_name() const;
};

// ---------------------------------------------------------------------------
// Path form

/// b_t(gamma) for gamma defined at least on [0, t]; samples after t are ignored.
Vector eval_b(const FunctionalSpec& spec, double t, const ForwardPath& gamma);

/// f(gamma) for gamma on [0, T].
double eval_f(const TerminalSpec& tspec, const ForwardPath& gamma);

// ---------------------------------------------------------------------------
// Lifted form. Node index k stands for t = t_k; (x, window) is a state on the grid.

Vector lifted_drift(const FunctionalSpec& spec, const GridSpec& grid, int k, const PointRef& x, const WindowRef& window);

/// DB(t_k, y)(hx, hw).
Vector lifted_drift_d1(const FunctionalSpec& spec, const GridSpec& grid, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw);

/// D^2B(t_k, y)(h, l).
Vector lifted_drift_d2(const FunctionalSpec& spec, const GridSpec& grid, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw, const PointRef& lx,
                       const WindowRef& lw);

double terminal_value(const TerminalSpec& tspec, const GridSpec& grid, const PointRef& x, const WindowRef& window);
double terminal_d1(const TerminalSpec& tspec, const GridSpec& grid, const PointRef& x, const WindowRef& window,
                   const PointRef& hx, const WindowRef& hw);
double terminal_d2(const TerminalSpec& tspec, const GridSpec& grid, const PointRef& x, const WindowRef& window,
                   const PointRef& hx, const WindowRef& hw, const PointRef& lx, const WindowRef& lw);

using LiftedDrift = std::function<Vector(double t, const WindowPair& pair)>;
using PathDrift = std::function<Vector(double t, const ForwardPath& gamma)>;

/// b_hat(t, x, phi) = b_t(close_pair((x, phi), t)), evaluated in closed form on the window.
LiftedDrift lift_b(const FunctionalSpec& spec);

/// b_t(gamma) = b_hat(t, gamma(t), L_t gamma).
PathDrift unlift(LiftedDrift b_hat);

/// B(t, y) = (b_hat(t, y), 0), class C.
WindowPair eval_B(const FunctionalSpec& spec, double t, const WindowPair& pair);
Vector dB_direction(const FunctionalSpec& spec, double t, const WindowPair& pair, const WindowPair& dir);
Vector d2B_direction(const FunctionalSpec& spec, double t, const WindowPair& pair, const WindowPair& dir1,
                     const WindowPair& dir2);

/// Phi(y) = f(close_pair(y, T)).
double eval_Phi(const TerminalSpec& tspec, const WindowPair& pair);
double dPhi_direction(const TerminalSpec& tspec, const WindowPair& pair, const WindowPair& dir);
double d2Phi_direction(const TerminalSpec& tspec, const WindowPair& pair, const WindowPair& dir1,
                       const WindowPair& dir2);

// ---------------------------------------------------------------------------
// JSON tag-unions

FunctionalSpec functional_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FunctionalSpec& spec);
TerminalSpec terminal_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TerminalSpec& tspec);

}  // namespace pathkolm
