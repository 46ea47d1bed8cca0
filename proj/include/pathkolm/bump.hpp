#pragma once

#include "pathkolm/path_space.hpp"

namespace pathkolm {

/// Finite-difference steps for pathwise derivatives: central differences for
/// vertical bumps of size h_v, forward differences over h_t = h_t_steps * dt.
struct BumpScheme {
  double h_v = 1e-3;
  int h_t_steps = 4;

  /// h_v = 1e-3 (1 + |gamma(t)|), h_t = 4 dt.
  static BumpScheme defaults(double gamma_t_norm) { return {1e-3 * (1.0 + gamma_t_norm), 4}; }

  double h_t(const GridSpec& grid) const { return h_t_steps * grid.dt(); }

  void validate() const {
    if (!(h_v > 0.0)) throw DomainError("vertical step must be positive");
    if (h_t_steps < 1) throw DomainError("horizontal step must be at least one grid step");
  }
};

/// gamma on [0, t] with gamma(t) replaced by gamma(t) + h e_i; all other nodes untouched.
inline ForwardPath vertical_bump(const ForwardPath& gamma, double t, int i, double h) {
  const int k = gamma.grid().node_index(t);
  if (gamma.size() < k + 1) throw DomainError("path is not defined up to the bump time");
  if (i < 0 || i >= gamma.grid().dimension()) throw DomainError("bump component out of range");
  Samples<double> values = gamma.values().topRows(k + 1);
  values(k, i) += h;
  return ForwardPath(gamma.grid(), std::move(values), gamma.interpolation());
}

/// gamma_{t,h}: gamma on [0, t] continued flat at gamma(t) up to t + h.
inline ForwardPath flat_extension(const ForwardPath& gamma, double t, double h) {
  const GridSpec& grid = gamma.grid();
  const int k = grid.node_index(t);
  const int m = grid.step_count(h);
  if (k + m > grid.steps()) throw DomainError("flat extension runs past T");
  if (gamma.size() < k + 1) throw DomainError("path is not defined up to the extension time");
  Samples<double> values(k + m + 1, grid.dimension());
  values.topRows(k + 1) = gamma.values().topRows(k + 1);
  values.bottomRows(m) = gamma.values().row(k).replicate(m, 1);
  return ForwardPath(grid, std::move(values), gamma.interpolation());
}

}  // namespace pathkolm
