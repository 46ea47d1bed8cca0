#include "pathkolm/functionals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace pathkolm {

namespace {

double zero_fn(double) { return 0.0; }
double one_fn(double) { return 1.0; }
double identity_fn(double x) { return x; }
double square_fn(double x) { return x * x; }
double twice_fn(double x) { return 2.0 * x; }
double two_fn(double) { return 2.0; }
double sin_fn(double x) { return std::sin(x); }
double cos_fn(double x) { return std::cos(x); }
double neg_sin_fn(double x) { return -std::sin(x); }
double neg_cos_fn(double x) { return -std::cos(x); }
double tanh_fn(double x) { return std::tanh(x); }
double tanh_d1(double x) {
  const double c = 1.0 / std::cosh(x);
  return c * c;
}
double tanh_d2(double x) {
  const double c = 1.0 / std::cosh(x);
  return -2.0 * std::tanh(x) * c * c;
}
// |x|^{5/2}: second derivative is only 1/2-Hoelder at the origin.
double abs_pow_fn(double x) { return std::pow(std::abs(x), 2.5); }
double abs_pow_d1(double x) { return 2.5 * std::copysign(std::pow(std::abs(x), 1.5), x); }
double abs_pow_d2(double x) { return 3.75 * std::sqrt(std::abs(x)); }

const std::array<ScalarFunction, 8>& builtins() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const std::array<ScalarFunction, 8> table{{
      {"zero", zero_fn, zero_fn, zero_fn, 0.0, 1.0},
      {"one", one_fn, zero_fn, zero_fn, 1.0, 1.0},
      {"linear", identity_fn, one_fn, zero_fn, inf, 1.0},
      {"square", square_fn, twice_fn, two_fn, inf, 1.0},
      {"sin", sin_fn, cos_fn, neg_sin_fn, 1.0, 1.0},
      {"cos", cos_fn, neg_sin_fn, neg_cos_fn, 1.0, 1.0},
      {"tanh", tanh_fn, tanh_d1, tanh_d2, 1.0, 1.0},
      {"abs_pow_2_5", abs_pow_fn, abs_pow_d1, abs_pow_d2, inf, 0.5},
  }};
  return table;
}

// Finite-difference spot check of the derivative callables.
void spot_check(const ScalarFunction& f) {
  constexpr double h = 1e-5;
  for (double x : {-0.7, 0.3, 1.1}) {
    const double fd1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
    const double fd2 = (f.d1(x + h) - f.d1(x - h)) / (2.0 * h);
    if (std::abs(fd1 - f.d1(x)) > 1e-6 * std::max(1.0, std::abs(f.d1(x))) ||
        std::abs(fd2 - f.d2(x)) > 1e-6 * std::max(1.0, std::abs(f.d2(x))))
      throw DomainError("derivatives of '" + f.name + "' fail the finite-difference check");
  }
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<int> sampling_nodes(const DiscreteSamplingDrift& d, const GridSpec& grid) {
  std::vector<int> nodes;
  nodes.reserve(d.times.size());
  for (double t : d.times) nodes.push_back(grid.node_index(t));
  return nodes;
}

// Samples gamma(t_j), t_j <= t_k, read from a lifted state.
std::vector<Vector> lifted_samples(const std::vector<int>& nodes, int k, int n, const PointRef& x,
                                   const WindowRef& window) {
  std::vector<Vector> out;
  for (int kj : nodes) {
    if (kj > k) break;
    out.emplace_back(kj == k ? Vector(x) : Vector(window.row(n - k + kj).transpose()));
  }
  return out;
}

Vector apply_sampling_map(SamplingMap h, const std::vector<Vector>& v, int d) {
  Vector out = Vector::Zero(d);
  for (const auto& vj : v) out += (h == SamplingMap::sin_sum) ? Vector(vj.array().sin()) : vj;
  if (h == SamplingMap::mean && !v.empty()) out /= static_cast<double>(v.size());
  return out;
}

Vector sampling_map_d1(SamplingMap h, const std::vector<Vector>& v, const std::vector<Vector>& dv, int d) {
  Vector out = Vector::Zero(d);
  for (std::size_t j = 0; j < v.size(); ++j)
    out += (h == SamplingMap::sin_sum) ? Vector(v[j].array().cos() * dv[j].array()) : dv[j];
  if (h == SamplingMap::mean && !v.empty()) out /= static_cast<double>(v.size());
  return out;
}

const char* sampling_name(SamplingMap h) {
  switch (h) {
    case SamplingMap::sum: return "sum";
    case SamplingMap::mean: return "mean";
    case SamplingMap::sin_sum: return "sin_sum";
  }
  return "sum";
}

SamplingMap sampling_from_name(const std::string& s) {
  if (s == "sum") return SamplingMap::sum;
  if (s == "mean") return SamplingMap::mean;
  if (s == "sin_sum") return SamplingMap::sin_sum;
  throw ConfigError("h", "unknown sampling map '" + s + "'");
}

void check_dims(const GridSpec& grid, int k, const PointRef& x, const WindowRef& window) {
  if (x.size() != grid.dimension() || window.rows() != grid.steps() || window.cols() != grid.dimension())
    throw DomainError("lifted state does not match the grid");
  if (k < 0 || k > grid.steps()) throw DomainError("node index outside the grid");
}

double sum_apply(double (*fn)(double), const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.unaryExpr(fn).sum();
}

}  // namespace

const ScalarFunction& builtin_function(std::string_view name) {
  for (const auto& f : builtins())
    if (f.name == name) return f;
  throw DomainError("unknown builtin function '" + std::string(name) + "'");
}

std::vector<std::string> builtin_function_names() {
  std::vector<std::string> out;
  for (const auto& f : builtins()) out.push_back(f.name);
  return out;
}

// ---------------------------------------------------------------------------

FunctionalSpec FunctionalSpec::integral(std::string_view g) {
  const ScalarFunction& f = builtin_function(g);
  spot_check(f);
  return {IntegralDrift{f}, f.holder};
}

FunctionalSpec FunctionalSpec::discrete_sampling(std::vector<double> times, SamplingMap h) {
  if (times.empty()) throw DomainError("discrete sampling needs at least one time");
  if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0.0)
    throw DomainError("sampling times must be non-negative and sorted");
  return {DiscreteSamplingDrift{std::move(times), h}, 1.0};
}

FunctionalSpec FunctionalSpec::running_sup() { return {RunningSupDrift{}, 1.0}; }

FunctionalSpec FunctionalSpec::endpoint_linear(Eigen::MatrixXd c) {
  if (c.rows() != c.cols() || c.size() == 0) throw DomainError("endpoint-linear drift needs a square matrix");
  return {EndpointLinearDrift{std::move(c)}, 1.0};
}

FunctionalSpec FunctionalSpec::zero() { return {ZeroDrift{}, 1.0}; }

std::string FunctionalSpec::kind_name() const {
  return std::visit(overloaded{[](const IntegralDrift& d) { return "integral(" + d.g.name + ")"; },
                               [](const DiscreteSamplingDrift& d) {
                                 return std::string("discrete_sampling(") + sampling_name(d.h) + ")";
                               },
                               [](const RunningSupDrift&) { return std::string("running_sup"); },
                               [](const EndpointLinearDrift&) { return std::string("endpoint_linear"); },
                               [](const ZeroDrift&) { return std::string("zero"); }},
                    kind);
}

double FunctionalSpec::sup_bound(const GridSpec& grid) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double root_d = std::sqrt(static_cast<double>(grid.dimension()));
  return std::visit(overloaded{[&](const IntegralDrift& d) { return grid.horizon() * d.g.sup_abs * root_d; },
                               [&](const DiscreteSamplingDrift& d) {
                                 if (d.h == SamplingMap::sin_sum) return d.times.size() * root_d;
                                 return inf;
                               },
                               [&](const RunningSupDrift&) { return inf; },
                               [&](const EndpointLinearDrift& d) { return d.c.isZero(0.0) ? 0.0 : inf; },
                               [&](const ZeroDrift&) { return 0.0; }},
                    kind);
}

std::vector<double> FunctionalSpec::singular_points(double t) const {
  std::vector<double> out;
  if (const auto* d = std::get_if<DiscreteSamplingDrift>(&kind))
    for (double tj : d->times)
      if (tj < t) out.push_back(tj - t);
  return out;
}

TerminalSpec TerminalSpec::endpoint(std::string_view f0) {
  const ScalarFunction& f = builtin_function(f0);
  spot_check(f);
  return {EndpointTerminal{f}};
}

TerminalSpec TerminalSpec::quadratic() { return {QuadraticTerminal{}}; }

TerminalSpec TerminalSpec::integral_plus_endpoint(std::string_view g, std::string_view f0) {
  const ScalarFunction& fg = builtin_function(g);
  const ScalarFunction& ff = builtin_function(f0);
  spot_check(fg);
  spot_check(ff);
  return {IntegralPlusEndpointTerminal{fg, ff}};
}

std::string TerminalSpec::kind_name() const {
  return std::visit(overloaded{[](const EndpointTerminal& e) { return "endpoint(" + e.f0.name + ")"; },
                               [](const QuadraticTerminal&) { return std::string("quadratic"); },
                               [](const IntegralPlusEndpointTerminal& e) {
                                 return "integral_plus_endpoint(" + e.g.name + "," + e.f0.name + ")";
                               }},
                    kind);
}

// ---------------------------------------------------------------------------
// Path form: reads the forward samples directly.

Vector eval_b(const FunctionalSpec& spec, double t, const ForwardPath& gamma) {
  const GridSpec& grid = gamma.grid();
  const int k = grid.node_index(t);
  if (gamma.size() < k + 1) throw DomainError("path is not defined up to the evaluation time");
  const int d = grid.dimension();
  const auto& v = gamma.values();
  return std::visit(
      overloaded{[&](const IntegralDrift& s) -> Vector {
                   Vector acc = Vector::Zero(d);
                   for (int i = 0; i < k; ++i) acc += v.row(i).transpose().unaryExpr(s.g.value);
                   return acc * grid.dt();
                 },
                 [&](const DiscreteSamplingDrift& s) -> Vector {
                   std::vector<Vector> vals;
                   for (int kj : sampling_nodes(s, grid)) {
                     if (kj > k) break;
                     vals.push_back(gamma.node(kj));
                   }
                   return apply_sampling_map(s.h, vals, d);
                 },
                 [&](const RunningSupDrift&) -> Vector { return v.topRows(k + 1).colwise().maxCoeff().transpose(); },
                 [&](const EndpointLinearDrift& s) -> Vector { return s.c * gamma.node(k); },
                 [&](const ZeroDrift&) -> Vector { return Vector::Zero(d); }},
      spec.kind);
}

double eval_f(const TerminalSpec& tspec, const ForwardPath& gamma) {
  const GridSpec& grid = gamma.grid();
  const int n = grid.steps();
  if (gamma.size() != n + 1) throw DomainError("terminal functional needs a path on [0, T]");
  const Vector end = gamma.node(n);
  return std::visit(overloaded{[&](const EndpointTerminal& e) { return end.unaryExpr(e.f0.value).sum(); },
                               [&](const QuadraticTerminal&) { return end.squaredNorm(); },
                               [&](const IntegralPlusEndpointTerminal& e) {
                                 double acc = 0.0;
                                 for (int i = 0; i < n; ++i) acc += gamma.values().row(i).unaryExpr(e.g.value).sum();
                                 return acc * grid.dt() + end.unaryExpr(e.f0.value).sum();
                               }},
                    tspec.kind);
}

// ---------------------------------------------------------------------------
// Lifted form: reads the window in closed form.

Vector lifted_drift(const FunctionalSpec& spec, const GridSpec& grid, int k, const PointRef& x,
                    const WindowRef& window) {
  check_dims(grid, k, x, window);
  const int n = grid.steps();
  const int d = grid.dimension();
  return std::visit(
      overloaded{[&](const IntegralDrift& s) -> Vector {
                   if (k == 0) return Vector::Zero(d);
                   return window.bottomRows(k).unaryExpr(s.g.value).colwise().sum().transpose() * grid.dt();
                 },
                 [&](const DiscreteSamplingDrift& s) -> Vector {
                   return apply_sampling_map(s.h, lifted_samples(sampling_nodes(s, grid), k, n, x, window), d);
                 },
                 [&](const RunningSupDrift&) -> Vector {
                   if (k == 0) return x;
                   return window.bottomRows(k).colwise().maxCoeff().transpose().cwiseMax(x);
                 },
                 [&](const EndpointLinearDrift& s) -> Vector { return s.c * x; },
                 [&](const ZeroDrift&) -> Vector { return Vector::Zero(d); }},
      spec.kind);
}

Vector lifted_drift_d1(const FunctionalSpec& spec, const GridSpec& grid, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw) {
  check_dims(grid, k, x, window);
  const int n = grid.steps();
  const int d = grid.dimension();
  return std::visit(
      overloaded{[&](const IntegralDrift& s) -> Vector {
                   if (k == 0) return Vector::Zero(d);
                   return (window.bottomRows(k).unaryExpr(s.g.d1).array() * hw.bottomRows(k).array())
                              .colwise()
                              .sum()
                              .transpose() *
                          grid.dt();
                 },
                 [&](const DiscreteSamplingDrift& s) -> Vector {
                   const auto nodes = sampling_nodes(s, grid);
                   return sampling_map_d1(s.h, lifted_samples(nodes, k, n, x, window),
                                          lifted_samples(nodes, k, n, hx, hw), d);
                 },
                 [&](const RunningSupDrift&) -> Vector {
                   throw UnsupportedDerivativeError("running sup drift has no derivative");
                 },
                 [&](const EndpointLinearDrift& s) -> Vector { return s.c * hx; },
                 [&](const ZeroDrift&) -> Vector { return Vector::Zero(d); }},
      spec.kind);
}

Vector lifted_drift_d2(const FunctionalSpec& spec, const GridSpec& grid, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw, const PointRef& lx,
                       const WindowRef& lw) {
  check_dims(grid, k, x, window);
  const int n = grid.steps();
  const int d = grid.dimension();
  return std::visit(
      overloaded{[&](const IntegralDrift& s) -> Vector {
                   if (k == 0) return Vector::Zero(d);
                   return (window.bottomRows(k).unaryExpr(s.g.d2).array() * hw.bottomRows(k).array() *
                           lw.bottomRows(k).array())
                              .colwise()
                              .sum()
                              .transpose() *
                          grid.dt();
                 },
                 [&](const DiscreteSamplingDrift& s) -> Vector {
                   if (s.h != SamplingMap::sin_sum) return Vector::Zero(d);
                   const auto nodes = sampling_nodes(s, grid);
                   const auto v = lifted_samples(nodes, k, n, x, window);
                   const auto a = lifted_samples(nodes, k, n, hx, hw);
                   const auto b = lifted_samples(nodes, k, n, lx, lw);
                   Vector out = Vector::Zero(d);
                   for (std::size_t j = 0; j < v.size(); ++j)
                     out.array() -= v[j].array().sin() * a[j].array() * b[j].array();
                   return out;
                 },
                 [&](const RunningSupDrift&) -> Vector {
                   throw UnsupportedDerivativeError("running sup drift has no derivative");
                 },
                 [&](const EndpointLinearDrift&) -> Vector { return Vector::Zero(d); },
                 [&](const ZeroDrift&) -> Vector { return Vector::Zero(d); }},
      spec.kind);
}

double terminal_value(const TerminalSpec& tspec, const GridSpec& grid, const PointRef& x, const WindowRef& window) {
  check_dims(grid, grid.steps(), x, window);
  return std::visit(overloaded{[&](const EndpointTerminal& e) { return x.unaryExpr(e.f0.value).sum(); },
                               [&](const QuadraticTerminal&) { return x.squaredNorm(); },
                               [&](const IntegralPlusEndpointTerminal& e) {
                                 return sum_apply(e.g.value, window) * grid.dt() + x.unaryExpr(e.f0.value).sum();
                               }},
                    tspec.kind);
}

double terminal_d1(const TerminalSpec& tspec, const GridSpec& grid, const PointRef& x, const WindowRef& window,
                   const PointRef& hx, const WindowRef& hw) {
  check_dims(grid, grid.steps(), x, window);
  return std::visit(
      overloaded{[&](const EndpointTerminal& e) { return x.unaryExpr(e.f0.d1).dot(hx); },
                 [&](const QuadraticTerminal&) { return 2.0 * x.dot(hx); },
                 [&](const IntegralPlusEndpointTerminal& e) {
                   return (window.unaryExpr(e.g.d1).array() * hw.array()).sum() * grid.dt() +
                          x.unaryExpr(e.f0.d1).dot(hx);
                 }},
      tspec.kind);
}

double terminal_d2(const TerminalSpec& tspec, const GridSpec& grid, const PointRef& x, const WindowRef& window,
                   const PointRef& hx, const WindowRef& hw, const PointRef& lx, const WindowRef& lw) {
  check_dims(grid, grid.steps(), x, window);
  return std::visit(
      overloaded{[&](const EndpointTerminal& e) { return (x.unaryExpr(e.f0.d2).array() * hx.array() * lx.array()).sum(); },
                 [&](const QuadraticTerminal&) { return 2.0 * hx.dot(lx); },
                 [&](const IntegralPlusEndpointTerminal& e) {
                   return (window.unaryExpr(e.g.d2).array() * hw.array() * lw.array()).sum() * grid.dt() +
                          (x.unaryExpr(e.f0.d2).array() * hx.array() * lx.array()).sum();
                 }},
      tspec.kind);
}

// ---------------------------------------------------------------------------

LiftedDrift lift_b(const FunctionalSpec& spec) {
  return [spec](double t, const WindowPair& pair) {
    return lifted_drift(spec, pair.grid(), pair.grid().node_index(t), pair.endpoint(), pair.window());
  };
}

PathDrift unlift(LiftedDrift b_hat) {
  return [b_hat = std::move(b_hat)](double t, const ForwardPath& gamma) { return b_hat(t, lift_path(gamma, t)); };
}

WindowPair eval_B(const FunctionalSpec& spec, double t, const WindowPair& pair) {
  const GridSpec& grid = pair.grid();
  return WindowPair::endpoint_only(grid, lifted_drift(spec, grid, grid.node_index(t), pair.endpoint(), pair.window()));
}

Vector dB_direction(const FunctionalSpec& spec, double t, const WindowPair& pair, const WindowPair& dir) {
  const GridSpec& grid = pair.grid();
  return lifted_drift_d1(spec, grid, grid.node_index(t), pair.endpoint(), pair.window(), dir.endpoint(),
                         dir.window());
}

Vector d2B_direction(const FunctionalSpec& spec, double t, const WindowPair& pair, const WindowPair& dir1,
                     const WindowPair& dir2) {
  const GridSpec& grid = pair.grid();
  return lifted_drift_d2(spec, grid, grid.node_index(t), pair.endpoint(), pair.window(), dir1.endpoint(),
                         dir1.window(), dir2.endpoint(), dir2.window());
}

double eval_Phi(const TerminalSpec& tspec, const WindowPair& pair) {
  return eval_f(tspec, close_pair(pair, pair.grid().horizon()));
}

double dPhi_direction(const TerminalSpec& tspec, const WindowPair& pair, const WindowPair& dir) {
  return terminal_d1(tspec, pair.grid(), pair.endpoint(), pair.window(), dir.endpoint(), dir.window());
}

double d2Phi_direction(const TerminalSpec& tspec, const WindowPair& pair, const WindowPair& dir1,
                       const WindowPair& dir2) {
  return terminal_d2(tspec, pair.grid(), pair.endpoint(), pair.window(), dir1.endpoint(), dir1.window(),
                     dir2.endpoint(), dir2.window());
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string require_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) throw ConfigError(field, "expected a string");
  return j[field].get<std::string>();
}

const ScalarFunction& require_builtin(const nlohmann::json& j, const char* field) {
  const std::string name = require_string(j, field);
  try {
    return builtin_function(name);
  } catch (const DomainError&) {
    throw ConfigError(field, "unknown builtin '" + name + "'");
  }
}

}  // namespace

FunctionalSpec functional_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("drift", "expected an object");
  const std::string kind = require_string(j, "kind");
  if (kind == "integral") return FunctionalSpec::integral(require_builtin(j, "g").name);
  if (kind == "discrete_sampling") {
    if (!j.contains("times") || !j["times"].is_array()) throw ConfigError("times", "expected an array of times");
    try {
      return FunctionalSpec::discrete_sampling(j["times"].get<std::vector<double>>(),
                                               sampling_from_name(j.value("h", std::string("sum"))));
    } catch (const DomainError& e) {
      throw ConfigError("times", e.what());
    }
  }
  if (kind == "running_sup") return FunctionalSpec::running_sup();
  if (kind == "zero") return FunctionalSpec::zero();
  if (kind == "endpoint_linear") {
    if (!j.contains("c")) throw ConfigError("c", "missing coefficient");
    const auto& c = j["c"];
    if (c.is_number()) return FunctionalSpec::endpoint_linear(Eigen::MatrixXd::Constant(1, 1, c.get<double>()));
    if (!c.is_array() || c.empty()) throw ConfigError("c", "expected a number or a square matrix");
    const auto rows = c.get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd m(rows.size(), rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.size()) throw ConfigError("c", "matrix must be square");
      for (std::size_t s = 0; s < rows.size(); ++s) m(r, s) = rows[r][s];
    }
    return FunctionalSpec::endpoint_linear(std::move(m));
  }
  throw ConfigError("kind", "unknown drift kind '" + kind + "'");
}

nlohmann::json to_json(const FunctionalSpec& spec) {
  return std::visit(overloaded{[](const IntegralDrift& d) { return nlohmann::json{{"kind", "integral"}, {"g", d.g.name}}; },
                               [](const DiscreteSamplingDrift& d) {
                                 return nlohmann::json{
                                     {"kind", "discrete_sampling"}, {"times", d.times}, {"h", sampling_name(d.h)}};
                               },
                               [](const RunningSupDrift&) { return nlohmann::json{{"kind", "running_sup"}}; },
                               [](const EndpointLinearDrift& d) {
                                 std::vector<std::vector<double>> rows(d.c.rows(), std::vector<double>(d.c.cols()));
                                 for (Eigen::Index r = 0; r < d.c.rows(); ++r)
                                   for (Eigen::Index s = 0; s < d.c.cols(); ++s) rows[r][s] = d.c(r, s);
                                 return nlohmann::json{{"kind", "endpoint_linear"}, {"c", rows}};
                               },
                               [](const ZeroDrift&) { return nlohmann::json{{"kind", "zero"}}; }},
                    spec.kind);
}

TerminalSpec terminal_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("terminal", "expected an object");
  const std::string kind = require_string(j, "kind");
  if (kind == "endpoint") return TerminalSpec::endpoint(require_builtin(j, "f0").name);
  if (kind == "quadratic") return TerminalSpec::quadratic();
  if (kind == "integral_plus_endpoint")
    return TerminalSpec::integral_plus_endpoint(require_builtin(j, "g").name, require_builtin(j, "f0").name);
  throw ConfigError("kind", "unknown terminal kind '" + kind + "'");
}

nlohmann::json to_json(const TerminalSpec& tspec) {
  return std::visit(overloaded{[](const EndpointTerminal& e) { return nlohmann::json{{"kind", "endpoint"}, {"f0", e.f0.name}}; },
                               [](const QuadraticTerminal&) { return nlohmann::json{{"kind", "quadratic"}}; },
                               [](const IntegralPlusEndpointTerminal& e) {
                                 return nlohmann::json{
                                     {"kind", "integral_plus_endpoint"}, {"g", e.g.name}, {"f0", e.f0.name}};
                               }},
                    tspec.kind);
}

}  // namespace pathkolm
