#include "pathkolm/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace pathkolm {

namespace {

double raw_bump(double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

// The profile and all its derivatives vanish at +-1, so the trapezoid rule
// converges faster than any power of the step here.
double integrate_raw_bump(int intervals) {
  const double h = 2.0 / intervals;
  double acc = 0.0;
  for (int i = 1; i < intervals; ++i) acc += raw_bump(-1.0 + i * h);
  return acc * h;
}

}  // namespace

double clamp(double x, double eps, double horizon) {
  if (x < -horizon - 1e-12 || x > 1e-12) throw DomainError("clamp argument outside [-T, 0]");
  if (!(eps > 0.0) || !(eps < horizon / 2.0)) throw DomainError("clamp needs 0 < eps < T/2");
  return std::clamp(x, -horizon + eps, -eps);
}

double Mollifier::normalization() {
  static const double z = 1.0 / integrate_raw_bump(1 << 16);
  return z;
}

double Mollifier::bump(double x) { return normalization() * raw_bump(x); }

Mollifier::Mollifier(GridSpec grid, int n) : grid_(grid), n_(n) {
  const double horizon = grid_.horizon();
  const double dt = grid_.dt();
  if (n < 1 || !(1.0 / n < horizon / 2.0)) throw DomainError("mollifier needs 1/n < T/2");
  if (2.0 / n < 4.0 * dt * (1.0 - 1e-12)) throw DomainError("mollifier kernel narrower than four grid cells");
  if (std::abs(integrate_raw_bump(4096) * normalization() - 1.0) > 1e-10)
    throw DomainError("bump profile does not integrate to one");

  const int steps = grid_.steps();
  const double eps = epsilon();
  const double h = dt / refinement;
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> weights(steps);
  for (int i = 0; i < steps; ++i) {
    std::fill(weights.begin(), weights.end(), 0.0);
    const double c = clamp(grid_.window_time(i), eps, horizon);
    const int first = std::max(0, static_cast<int>(std::floor((c - eps + horizon) / dt)) - 1);
    const int last = std::min(steps - 1, static_cast<int>(std::ceil((c + eps + horizon) / dt)) + 1);
    for (int j = first; j <= last; ++j) {
      const double left = grid_.window_time(j);
      for (int q = 0; q <= refinement; ++q) {
        const double w = (q == 0 || q == refinement ? 0.5 : 1.0) * h * kernel(c - (left + q * h));
        if (w == 0.0) continue;
        if (j == steps - 1) {
          weights[j] += w;
        } else {
          const double theta = static_cast<double>(q) / refinement;
          weights[j] += (1.0 - theta) * w;
          weights[j + 1] += theta * w;
        }
      }
    }
    double total = 0.0;
    for (int j = first; j <= last; ++j) total += weights[j];
    for (int j = first; j <= last; ++j)
      if (weights[j] != 0.0) triplets.emplace_back(i, j, weights[j] / total);
  }
  matrix_.resize(steps, steps);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
}

Samples<double> Mollifier::apply(const WindowRef& window) const { return apply_rows(window, 0); }

Samples<double> Mollifier::apply_rows(const WindowRef& window, int first_row) const {
  if (window.rows() != grid_.steps() || window.cols() != grid_.dimension())
    throw DomainError("window does not match the mollifier grid");
  Samples<double> out = matrix_.middleRows(first_row, grid_.steps() - first_row) * window;
  return out;
}

WindowPair Mollifier::apply(const WindowPair& pair) const {
  return WindowPair::unchecked(pair.grid(), pair.endpoint(), apply(pair.window()), PairClass::endpoint_jump);
}

// ---------------------------------------------------------------------------

namespace {

// Smoothed copy of the rows a drift at node k can see; the others stay zero.
Samples<double> visible_rows(const Mollifier& m, int k, const WindowRef& window) {
  const int steps = m.grid().steps();
  Samples<double> out = Samples<double>::Zero(steps, m.grid().dimension());
  if (k > 0) out.bottomRows(k) = m.apply_rows(window, steps - k);
  return out;
}

}  // namespace

Vector approx_drift_value(const FunctionalSpec& spec, const Mollifier& m, int k, const PointRef& x,
                          const WindowRef& window) {
  return lifted_drift(spec, m.grid(), k, x, visible_rows(m, k, window));
}

Vector approx_drift_d1(const FunctionalSpec& spec, const Mollifier& m, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw) {
  return lifted_drift_d1(spec, m.grid(), k, x, visible_rows(m, k, window), hx, visible_rows(m, k, hw));
}

Vector approx_drift_d2(const FunctionalSpec& spec, const Mollifier& m, int k, const PointRef& x,
                       const WindowRef& window, const PointRef& hx, const WindowRef& hw, const PointRef& lx,
                       const WindowRef& lw) {
  return lifted_drift_d2(spec, m.grid(), k, x, visible_rows(m, k, window), hx, visible_rows(m, k, hw), lx,
                         visible_rows(m, k, lw));
}

LiftedDrift approx_drift(const FunctionalSpec& spec, std::shared_ptr<const Mollifier> m) {
  return [spec, m = std::move(m)](double t, const WindowPair& pair) {
    return approx_drift_value(spec, *m, pair.grid().node_index(t), pair.endpoint(), pair.window());
  };
}

double approx_terminal_value(const TerminalSpec& tspec, const Mollifier& m, const PointRef& x,
                             const WindowRef& window) {
  return terminal_value(tspec, m.grid(), x, m.apply(window));
}

LiftedTerminal approx_terminal(const TerminalSpec& tspec, std::shared_ptr<const Mollifier> m) {
  return [tspec, m = std::move(m)](const WindowPair& pair) {
    return approx_terminal_value(tspec, *m, pair.endpoint(), pair.window());
  };
}

// ---------------------------------------------------------------------------

bool Assumption2Report::flagged(const std::string& clause, double a) const {
  for (const auto& f : flags)
    if (f.clause == clause && f.a == a) return f.non_monotone || f.non_vanishing;
  return false;
}

Assumption2Report assumption2_check(const FunctionalSpec& spec, const TerminalSpec& tspec, double t,
                                    const WindowPair& y, const std::vector<int>& n_list,
                                    const std::vector<double>& a_list) {
  if (!spec.smooth()) throw UnsupportedDerivativeError("assumption check needs a differentiable drift");
  const GridSpec& grid = y.grid();
  const int k = grid.node_index(t);
  const int d = grid.dimension();
  const Vector ones = Vector::Ones(d);

  static const char* const clauses[] = {"dB", "dPhi", "d2Phi_left", "d2Phi_right", "d2Phi_both"};
  Assumption2Report report;
  for (double a : a_list) {
    Samples<double> q = Samples<double>::Zero(grid.steps(), d);
    for (int j = 0; j < grid.steps(); ++j)
      if (grid.window_time(j) >= a - 1e-12 * grid.dt()) q.row(j).setOnes();
    const Vector db_q = lifted_drift_d1(spec, grid, k, y.endpoint(), y.window(), ones, q);

    std::vector<std::vector<double>> gaps(5);
    for (int n : n_list) {
      const Mollifier m(grid, n);
      const Samples<double> jq = m.apply(q);
      const Samples<double> diff = jq - q;
      const Vector zero = Vector::Zero(d);
      const double g[5] = {
          (lifted_drift_d1(spec, grid, k, y.endpoint(), y.window(), ones, jq) - db_q).norm(),
          std::abs(terminal_d1(tspec, grid, y.endpoint(), y.window(), zero, diff)),
          std::abs(terminal_d2(tspec, grid, y.endpoint(), y.window(), zero, diff, ones, q)),
          std::abs(terminal_d2(tspec, grid, y.endpoint(), y.window(), ones, q, zero, diff)),
          std::abs(terminal_d2(tspec, grid, y.endpoint(), y.window(), zero, diff, zero, diff)),
      };
      for (int c = 0; c < 5; ++c) {
        gaps[c].push_back(g[c]);
        report.rows.push_back({clauses[c], a, n, g[c]});
      }
    }
    for (int c = 0; c < 5; ++c) {
      Assumption2Flag flag{clauses[c], a};
      const auto& s = gaps[c];
      const double largest = s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
      for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[i - 1] + 1e-12 * std::max(1.0, largest)) flag.non_monotone = true;
      if (!s.empty() && s.back() > 1e-9 && s.back() > 0.25 * largest) flag.non_vanishing = true;
      report.flags.push_back(flag);
    }
  }
  return report;
}

void write_assumption2_csv(std::ostream& os, const Assumption2Report& report) {
  os << "clause,a,n,gap\n" << std::setprecision(17);
  for (const auto& r : report.rows) os << r.clause << ',' << r.a << ',' << r.n << ',' << r.gap << '\n';
}

}  // namespace pathkolm
