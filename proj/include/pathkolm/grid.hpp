#pragma once

#include <cmath>
#include <sstream>

#include "pathkolm/errors.hpp"

namespace pathkolm {

/// Uniform time grid on [0, T] with N steps in dimension d.
///
/// Forward nodes are t_k = k dt for k = 0..N. Backward windows live on
/// [-T, 0) and are sampled at xi_j = -T + j dt for j = 0..N-1, so window index
/// j and forward node k are related by a shift of N.
class GridSpec {
 public:
  GridSpec(double horizon, int steps, int dimension)
      : horizon_(horizon), steps_(steps), dimension_(dimension), dt_(horizon / steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("grid horizon must be positive");
    if (steps < 1) throw DomainError("grid needs at least one step");
    if (dimension < 1) throw DomainError("grid dimension must be positive");
  }

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  int dimension() const noexcept { return dimension_; }
  double dt() const noexcept { return dt_; }

  double time(int k) const noexcept { return k * dt_; }
  double window_time(int j) const noexcept { return -horizon_ + j * dt_; }

  /// Index k with t_k == t; throws when t is off-grid or outside [0, T].
  int node_index(double t) const {
    const int k = static_cast<int>(std::lround(t / dt_));
    if (std::abs(k * dt_ - t) > 1e-9 * dt_ || k < 0 || k > steps_) {
      std::ostringstream os;
      os << "time " << t << " is not a node of the grid (T=" << horizon_ << ", N=" << steps_ << ")";
      throw GridAlignmentError(os.str());
    }
    return k;
  }

  /// Number of grid steps spanned by a non-negative duration.
  int step_count(double duration) const {
    const int m = static_cast<int>(std::lround(duration / dt_));
    if (m < 0 || std::abs(m * dt_ - duration) > 1e-9 * dt_) {
      std::ostringstream os;
      os << "duration " << duration << " is not a multiple of dt=" << dt_;
      throw GridAlignmentError(os.str());
    }
    return m;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
    return a.steps_ == b.steps_ && a.dimension_ == b.dimension_ && a.horizon_ == b.horizon_;
  }

 private:
  double horizon_;
  int steps_;
  int dimension_;
  double dt_;
};

}  // namespace pathkolm
