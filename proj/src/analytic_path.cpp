#include "pathkolm/analytic_path.hpp"

#include <cmath>
#include <sstream>

namespace pathkolm {

std::string AnalyticPath::name() const {
  std::ostringstream os;
  switch (shape_) {
    case Shape::constant: os << "constant(" << offset_ << ")"; break;
    case Shape::cosine: os << "cosine(" << offset_ << "," << p1_ << "," << p2_ << ")"; break;
    case Shape::quadratic: os << "quadratic(" << offset_ << "," << p1_ << ")"; break;
    case Shape::linear: os << "linear(" << offset_ << "," << p1_ << ")"; break;
  }
  return os.str();
}

double AnalyticPath::value(double s) const {
  switch (shape_) {
    case Shape::constant: return offset_;
    case Shape::cosine: return offset_ + p1_ * std::cos(p2_ * s);
    case Shape::quadratic: return offset_ + p1_ * s * s;
    case Shape::linear: return offset_ + p1_ * s;
  }
  return 0.0;
}

double AnalyticPath::derivative(double s) const {
  switch (shape_) {
    case Shape::constant: return 0.0;
    case Shape::cosine: return -p1_ * p2_ * std::sin(p2_ * s);
    case Shape::quadratic: return 2.0 * p1_ * s;
    case Shape::linear: return p1_;
  }
  return 0.0;
}

ForwardPath AnalyticPath::sample(const GridSpec& grid, double t) const {
  const int k = grid.node_index(t);
  Samples<double> values(k + 1, grid.dimension());
  for (int i = 0; i <= k; ++i) values.row(i).setConstant(value(grid.time(i)));
  return ForwardPath(grid, std::move(values));
}

WindowPair AnalyticPath::window_pair(const GridSpec& grid) const {
  Samples<double> window(grid.steps(), grid.dimension());
  for (int j = 0; j < grid.steps(); ++j) window.row(j).setConstant(value(grid.window_time(j)));
  return WindowPair::continuous(grid, Vector::Constant(grid.dimension(), value(0.0)), std::move(window));
}

Samples<double> AnalyticPath::window_derivative(const GridSpec& grid) const {
  Samples<double> out(grid.steps(), grid.dimension());
  for (int j = 0; j < grid.steps(); ++j) out.row(j).setConstant(derivative(grid.window_time(j)));
  return out;
}

Samples<double> AnalyticPath::extension_derivative(const GridSpec& grid, double t) const {
  const int k = grid.node_index(t);
  const int n = grid.steps();
  Samples<double> out = Samples<double>::Zero(n, grid.dimension());
  for (int j = n - k; j < n; ++j) out.row(j).setConstant(derivative(t + grid.window_time(j)));
  return out;
}

}  // namespace pathkolm
