#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "pathkolm/errors.hpp"
#include "pathkolm/grid.hpp"

namespace pathkolm {

/// Node samples, one row per node and one column per component.
template <typename Scalar>
using Samples = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Point = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Interpolation { piecewise_linear, piecewise_constant };

/// Regularity class of an (endpoint, window) pair.
///
/// continuous     window continuous and the endpoint equals its left limit at 0
/// endpoint_jump  window continuous, endpoint may differ from the left limit
/// single_jump    at most one jump inside the window (at jump_at), endpoint matches
/// general        any cadlag pair
enum class PairClass { continuous, endpoint_jump, single_jump, general };

inline std::string_view to_string(PairClass c) {
  switch (c) {
    case PairClass::continuous: return "C_hat";
    case PairClass::endpoint_jump: return "C";
    case PairClass::single_jump: return "D_t";
    case PairClass::general: return "D";
  }
  return "D";
}

inline PairClass pair_class_from_string(std::string_view s) {
  if (s == "C_hat") return PairClass::continuous;
  if (s == "C") return PairClass::endpoint_jump;
  if (s == "D_t") return PairClass::single_jump;
  if (s == "D") return PairClass::general;
  throw DomainError("unknown pair class '" + std::string(s) + "'");
}

/// Tolerance for treating |x - phi(-dt)| as a continuous join: ten times the
/// largest of the last (up to eight) adjacent window increments, never below 1e-6.
template <typename Derived>
double continuity_tolerance(const Eigen::MatrixBase<Derived>& window) {
  const Eigen::Index n = window.rows();
  double step = 0.0;
  for (Eigen::Index j = std::max<Eigen::Index>(1, n - 8); j < n; ++j) {
    step = std::max(step, static_cast<double>((window.row(j) - window.row(j - 1)).norm()));
  }
  return std::max(1e-6, 10.0 * step);
}

/// A path gamma sampled at forward nodes t_0 .. t_{size-1}.
template <typename Scalar>
class BasicForwardPath {
 public:
  BasicForwardPath(GridSpec grid, Samples<Scalar> values,
                   Interpolation interpolation = Interpolation::piecewise_linear)
      : grid_(grid), values_(std::move(values)), interpolation_(interpolation) {
    if (values_.rows() < 1) throw DomainError("forward path needs at least one sample");
    if (values_.rows() > grid_.steps() + 1) throw DomainError("forward path longer than the grid");
    if (values_.cols() != grid_.dimension()) throw DomainError("forward path dimension mismatch");
    if (!values_.allFinite()) throw DomainError("forward path has non-finite samples");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const Samples<Scalar>& values() const noexcept { return values_; }
  Interpolation interpolation() const noexcept { return interpolation_; }
  int size() const noexcept { return static_cast<int>(values_.rows()); }
  double end_time() const noexcept { return grid_.time(size() - 1); }

  Point<Scalar> node(int k) const { return values_.row(k).transpose(); }

  Point<Scalar> value_at(double s) const {
    const double dt = grid_.dt();
    if (s < -1e-12 * dt || s > end_time() + 1e-9 * dt) throw DomainError("path evaluated outside its domain");
    const double pos = std::clamp(s / dt, 0.0, static_cast<double>(size() - 1));
    const int k = static_cast<int>(std::floor(pos + 1e-9));
    if (k >= size() - 1) return node(size() - 1);
    const double frac = pos - k;
    if (interpolation_ == Interpolation::piecewise_constant || frac < 1e-9) return node(k);
    return ((1.0 - frac) * values_.row(k) + frac * values_.row(k + 1)).transpose();
  }

 private:
  GridSpec grid_;
  Samples<Scalar> values_;
  Interpolation interpolation_;
};

/// Element (x, phi) of R^d x D([-T, 0)); phi holds N samples at -T, ..., -dt.
template <typename Scalar>
class BasicWindowPair {
 public:
  BasicWindowPair(GridSpec grid, Point<Scalar> endpoint, Samples<Scalar> window, PairClass cls,
                  std::optional<int> jump_at = std::nullopt)
      : BasicWindowPair(grid, std::move(endpoint), std::move(window), cls, jump_at, Unchecked{}) {
    validate();
  }

  /// A pair of class C_hat; throws if the endpoint does not join the window.
  static BasicWindowPair continuous(GridSpec grid, Point<Scalar> x, Samples<Scalar> window) {
    return BasicWindowPair(grid, std::move(x), std::move(window), PairClass::continuous);
  }

  static BasicWindowPair zero(const GridSpec& grid) {
    return unchecked(grid, Point<Scalar>::Zero(grid.dimension()),
                     Samples<Scalar>::Zero(grid.steps(), grid.dimension()), PairClass::continuous);
  }

  static BasicWindowPair constant(const GridSpec& grid, const Point<Scalar>& c) {
    Samples<Scalar> w = c.transpose().replicate(grid.steps(), 1);
    return unchecked(grid, c, std::move(w), PairClass::continuous);
  }

  /// (x, 0): a pure endpoint, class C.
  static BasicWindowPair endpoint_only(const GridSpec& grid, const Point<Scalar>& x) {
    return unchecked(grid, x, Samples<Scalar>::Zero(grid.steps(), grid.dimension()),
                     PairClass::endpoint_jump);
  }

  /// Construction without value checks, for operations whose output class is
  /// known from the class of their inputs.
  static BasicWindowPair unchecked(GridSpec grid, Point<Scalar> x, Samples<Scalar> window, PairClass cls,
                                   std::optional<int> jump_at = std::nullopt) {
    return BasicWindowPair(grid, std::move(x), std::move(window), cls, jump_at, Unchecked{});
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const Point<Scalar>& endpoint() const noexcept { return x_; }
  const Samples<Scalar>& window() const noexcept { return window_; }
  PairClass pair_class() const noexcept { return class_; }
  std::optional<int> jump_at() const noexcept { return jump_at_; }

  /// Left limit phi(0-) as represented on the grid.
  Point<Scalar> left_limit() const { return window_.row(window_.rows() - 1).transpose(); }

  friend BasicWindowPair operator+(const BasicWindowPair& a, const BasicWindowPair& b) {
    check_same_grid(a, b);
    auto [cls, jump] = join(a, b);
    return unchecked(a.grid_, a.x_ + b.x_, a.window_ + b.window_, cls, jump);
  }

  friend BasicWindowPair operator-(const BasicWindowPair& a, const BasicWindowPair& b) {
    check_same_grid(a, b);
    auto [cls, jump] = join(a, b);
    return unchecked(a.grid_, a.x_ - b.x_, a.window_ - b.window_, cls, jump);
  }

  friend BasicWindowPair operator*(Scalar s, const BasicWindowPair& a) {
    return unchecked(a.grid_, s * a.x_, s * a.window_, a.class_, a.jump_at_);
  }

 private:
  struct Unchecked {};

  BasicWindowPair(GridSpec grid, Point<Scalar> x, Samples<Scalar> window, PairClass cls,
                  std::optional<int> jump_at, Unchecked)
      : grid_(grid), x_(std::move(x)), window_(std::move(window)), class_(cls), jump_at_(jump_at) {
    if (x_.size() != grid_.dimension()) throw DomainError("endpoint dimension mismatch");
    if (window_.rows() != grid_.steps() || window_.cols() != grid_.dimension())
      throw DomainError("window must hold N samples of dimension d");
  }

  void validate() const {
    if (!x_.allFinite() || !window_.allFinite()) throw DomainError("pair has non-finite values");
    switch (class_) {
      case PairClass::continuous:
        if (jump_at_) throw DomainError("class C_hat admits no jump");
        if ((x_ - left_limit()).norm() > continuity_tolerance(window_))
          throw DomainError("class C_hat requires x = lim phi(s) as s -> 0-");
        break;
      case PairClass::endpoint_jump:
        if (jump_at_) throw DomainError("class C carries no interior jump");
        break;
      case PairClass::single_jump:
        if (!jump_at_ || *jump_at_ < 1 || *jump_at_ >= grid_.steps())
          throw DomainError("class D_t needs jump_at inside the window");
        if ((x_ - left_limit()).norm() > continuity_tolerance(window_.bottomRows(grid_.steps() - *jump_at_)))
          throw DomainError("class D_t requires the endpoint to join the window");
        break;
      case PairClass::general:
        if (jump_at_) throw DomainError("class D does not record a jump location");
        break;
    }
  }

  static void check_same_grid(const BasicWindowPair& a, const BasicWindowPair& b) {
    if (!(a.grid_ == b.grid_)) throw DomainError("pairs live on different grids");
  }

  static std::pair<PairClass, std::optional<int>> join(const BasicWindowPair& a, const BasicWindowPair& b) {
    if (a.class_ == PairClass::continuous) return {b.class_, b.jump_at_};
    if (b.class_ == PairClass::continuous) return {a.class_, a.jump_at_};
    if (a.class_ == PairClass::general || b.class_ == PairClass::general) return {PairClass::general, {}};
    if (a.class_ == PairClass::endpoint_jump && b.class_ == PairClass::endpoint_jump)
      return {PairClass::endpoint_jump, {}};
    if (a.class_ == PairClass::single_jump && b.class_ == PairClass::single_jump && a.jump_at_ == b.jump_at_)
      return {PairClass::single_jump, a.jump_at_};
    return {PairClass::general, {}};
  }

  GridSpec grid_;
  Point<Scalar> x_;
  Samples<Scalar> window_;
  PairClass class_;
  std::optional<int> jump_at_;
};

using ForwardPath = BasicForwardPath<double>;
using WindowPair = BasicWindowPair<double>;
using PathSamples2D = Samples<double>;
using Vector = Point<double>;

// ---------------------------------------------------------------------------
// Restriction, extension and closure

/// gamma(s) = phi(s - t) for s in [0, t): the first k = t/dt nodes.
template <typename Scalar>
BasicForwardPath<Scalar> restrict_window(const GridSpec& grid, const Samples<Scalar>& window, double t) {
  const int k = grid.node_index(t);
  if (k == 0) throw DomainError("restriction needs t > 0");
  return BasicForwardPath<Scalar>(grid, window.bottomRows(k));
}

template <typename Scalar>
BasicForwardPath<Scalar> restrict_window(const BasicWindowPair<Scalar>& pair, double t) {
  return restrict_window(pair.grid(), pair.window(), t);
}

/// Backward extension: gamma(0) on [-T, -t), gamma(t + s) on [-t, 0).
/// Uses gamma on [0, t) only; for t = 0 the window is constant gamma(0).
template <typename Scalar>
Samples<Scalar> extend_path(const BasicForwardPath<Scalar>& gamma, double t) {
  const GridSpec& grid = gamma.grid();
  const int k = grid.node_index(t);
  const int n = grid.steps();
  if (gamma.size() < std::max(k, 1)) throw DomainError("path too short for the requested extension");
  Samples<Scalar> window(n, grid.dimension());
  window.topRows(n - k) = gamma.values().row(0).replicate(n - k, 1);
  window.bottomRows(k) = gamma.values().topRows(k);
  return window;
}

/// (x, phi) -> the path on [0, t] equal to phi(s - t) before t and x at t.
template <typename Scalar>
BasicForwardPath<Scalar> close_pair(const BasicWindowPair<Scalar>& pair, double t) {
  const GridSpec& grid = pair.grid();
  const int k = grid.node_index(t);
  Samples<Scalar> values(k + 1, grid.dimension());
  values.topRows(k) = pair.window().bottomRows(k);
  values.row(k) = pair.endpoint().transpose();
  return BasicForwardPath<Scalar>(grid, std::move(values));
}

/// (gamma(t), L_t gamma). Classified C_hat when gamma(t) joins the last
/// window sample within continuity_tolerance, otherwise C.
template <typename Scalar>
BasicWindowPair<Scalar> lift_path(const BasicForwardPath<Scalar>& gamma, double t) {
  const int k = gamma.grid().node_index(t);
  if (gamma.size() < k + 1) throw DomainError("path does not reach the lifting time");
  Samples<Scalar> window = extend_path(gamma, t);
  Point<Scalar> x = gamma.node(k);
  const bool joins = (x - window.row(window.rows() - 1).transpose()).norm() <= continuity_tolerance(window);
  return BasicWindowPair<Scalar>::unchecked(gamma.grid(), std::move(x), std::move(window),
                                            joins ? PairClass::continuous : PairClass::endpoint_jump);
}

// ---------------------------------------------------------------------------
// Shift semigroup

/// Class and jump location of e^{tA} y for y of class `cls`, t = m dt, N window steps.
inline std::pair<PairClass, std::optional<int>> shifted_class(PairClass cls, std::optional<int> jump_at, int m,
                                                              int steps) {
  if (m == 0) return {cls, jump_at};
  switch (cls) {
    case PairClass::endpoint_jump:
      if (m < steps) return {PairClass::single_jump, steps - m};
      return {PairClass::continuous, std::nullopt};
    case PairClass::single_jump:
      if (*jump_at - m >= 1) return {PairClass::single_jump, *jump_at - m};
      return {PairClass::continuous, std::nullopt};
    default:
      return {cls, jump_at};
  }
}

/// e^{tA}(x, phi) = (x, phi(. + t) on [-T, -t), x on [-t, 0)).
template <typename Scalar>
BasicWindowPair<Scalar> semigroup_shift(const BasicWindowPair<Scalar>& pair, double t) {
  const GridSpec& grid = pair.grid();
  const int n = grid.steps();
  const int m = std::min(grid.step_count(t), n);
  if (m == 0) return pair;

  Samples<Scalar> window(n, grid.dimension());
  window.topRows(n - m) = pair.window().bottomRows(n - m);
  window.bottomRows(m) = pair.endpoint().transpose().replicate(m, 1);

  const auto [cls, jump] = shifted_class(pair.pair_class(), pair.jump_at(), m, n);
  return BasicWindowPair<Scalar>::unchecked(grid, pair.endpoint(), std::move(window), cls, jump);
}

// ---------------------------------------------------------------------------
// Norms

/// sqrt(|x|^2 + sup_s |phi(s)|^2) over the stored nodes.
template <typename Scalar>
double norm_sup(const BasicWindowPair<Scalar>& pair) {
  const double sup = pair.window().rowwise().norm().maxCoeff();
  return std::sqrt(pair.endpoint().squaredNorm() + sup * sup);
}

/// sqrt(|x|^2 + ||phi||_p^2) with ||phi||_p^p = sum_j |phi_j|^p dt.
template <typename Scalar>
double norm_lp(const BasicWindowPair<Scalar>& pair, double p) {
  if (!(p >= 2.0)) throw DomainError("L^p norms are defined here for p >= 2 only");
  const double integral = pair.window().rowwise().norm().array().pow(p).sum() * pair.grid().dt();
  const double lp = std::pow(integral, 1.0 / p);
  return std::sqrt(pair.endpoint().squaredNorm() + lp * lp);
}

struct Norm {
  enum class Kind { sup, lp } kind = Kind::sup;
  double p = 2.0;

  static Norm sup() { return {}; }
  static Norm lp(double p) { return {Kind::lp, p}; }
};

template <typename Scalar>
double norm(const BasicWindowPair<Scalar>& pair, Norm kind) {
  return kind.kind == Norm::Kind::sup ? norm_sup(pair) : norm_lp(pair, kind.p);
}

/// Constant c with norm_lp <= c * norm_sup on [-T, 0).
inline double lp_embedding_constant(double p, double horizon) {
  return std::max(1.0, std::pow(horizon, 1.0 / p));
}

}  // namespace pathkolm
