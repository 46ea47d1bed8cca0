#pragma once

#include <Eigen/SparseCore>

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "pathkolm/functionals.hpp"

namespace pathkolm {

/// a_eps: clamps a window time in [-T, 0] to [-T + eps, -eps].
double clamp(double x, double eps, double horizon);

/// Smoothing operator J_n on windows of a fixed grid, with eps = 1/n.
///
/// (J_n phi)(xi_i) = int rho_n(a_eps(xi_i) - y) phi(y) dy with rho_n(x) = n rho(n x)
/// and rho(x) = Z exp(-1 / (1 - x^2)) on (-1, 1). The integral is taken by a
/// trapezoid rule on the window grid refined eightfold, with phi linearly
/// interpolated between nodes and held constant on the last cell [-dt, 0).
/// Each row is renormalised to unit sum, so J_n maps constants to themselves
/// exactly and is a convex combination of window samples.
class Mollifier {
 public:
  static constexpr int refinement = 8;

  Mollifier(GridSpec grid, int n);

  const GridSpec& grid() const noexcept { return grid_; }
  int n() const noexcept { return n_; }
  double epsilon() const noexcept { return 1.0 / n_; }

  /// Normalisation Z with int rho = 1.
  static double normalization();
  /// rho(x).
  static double bump(double x);
  /// rho_n(x) = n rho(n x).
  double kernel(double x) const { return n_ * bump(n_ * x); }

  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  const Matrix& matrix() const noexcept { return matrix_; }

  Samples<double> apply(const WindowRef& window) const;
  /// Rows [first_row, N) of J_n phi.
  Samples<double> apply_rows(const WindowRef& window, int first_row) const;
  /// (x, J_n phi): window continuous, endpoint untouched, class C.
  WindowPair apply(const WindowPair& pair) const;

 private:
  GridSpec grid_;
  int n_;
  Matrix matrix_;
};

/// B_n(t, y) = B(t, x, J_n phi); only the rows the drift can see are smoothed.
Vector approx_drift_value(const FunctionalSpec& spec, const Mollifier& m, int k, const PointRef& x,
                          const WindowRef& window);
/// DB_n(t, y) h = DB(t, J_n y) J_n h.
Vector approx_drift_d1(const FunctionalSpec& spec, const Mollifier& m, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw);
Vector approx_drift_d2(const FunctionalSpec& spec, const Mollifier& m, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw, const PointRef& lx,
                       const WindowRef& lw);

LiftedDrift approx_drift(const FunctionalSpec& spec, std::shared_ptr<const Mollifier> m);

using LiftedTerminal = std::function<double(const WindowPair&)>;
/// Phi_n(y) = Phi(x, J_n phi).
LiftedTerminal approx_terminal(const TerminalSpec& tspec, std::shared_ptr<const Mollifier> m);
double approx_terminal_value(const TerminalSpec& tspec, const Mollifier& m, const PointRef& x, const WindowRef& window);

struct Assumption2Row {
  std::string clause;
  double a = 0.0;
  int n = 0;
  double gap = 0.0;
};

struct Assumption2Flag {
  std::string clause;
  double a = 0.0;
  bool non_monotone = false;
  bool non_vanishing = false;
};

struct Assumption2Report {
  std::vector<Assumption2Row> rows;
  std::vector<Assumption2Flag> flags;

  bool flagged(const std::string& clause, double a) const;
};

/// Evaluates the one-jump convergence clauses (dB, dPhi, d2Phi_left,
/// d2Phi_right, d2Phi_both) for q = (1, 1_[a,0]) along n_list, with the drift
/// taken at time t and state y. A sequence is flagged non-monotone when it
/// increases anywhere, and non-vanishing when its last gap exceeds a quarter
/// of its largest gap.
Assumption2Report assumption2_check(const FunctionalSpec& spec, const TerminalSpec& tspec, double t,
                                    const WindowPair& y, const std::vector<int>& n_list,
                                    const std::vector<double>& a_list);

/// CSV with columns clause,a,n,gap.
void write_assumption2_csv(std::ostream& os, const Assumption2Report& report);

}  // namespace pathkolm
