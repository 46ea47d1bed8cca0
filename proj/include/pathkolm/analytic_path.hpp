#pragma once

#include <string>

#include "pathkolm/path_space.hpp"

namespace pathkolm {

/// Closed-form C^1 path s -> offset + shape(s), identical in every component.
/// Used where a derivative must be known exactly (window directions A y,
/// right derivatives of extended paths).
class AnalyticPath {
 public:
  enum class Shape { constant, cosine, quadratic, linear };

  static AnalyticPath constant(double value) { return {Shape::constant, value, 0.0, 0.0}; }
  /// offset + amplitude * cos(omega s); zero slope at s = 0.
  static AnalyticPath cosine(double offset, double amplitude, double omega) {
    return {Shape::cosine, offset, amplitude, omega};
  }
  /// offset + a s^2; zero slope at s = 0.
  static AnalyticPath quadratic(double offset, double a) { return {Shape::quadratic, offset, a, 0.0}; }
  static AnalyticPath linear(double offset, double slope) { return {Shape::linear, offset, slope, 0.0}; }

  Shape shape() const noexcept { return shape_; }
  std::string name() const;

  double value(double s) const;
  double derivative(double s) const;

  /// Forward path sampled at nodes 0..k where t = t_k.
  ForwardPath sample(const GridSpec& grid, double t) const;

  /// (p(0), p on the window nodes): a pair in C_hat whose window is C^1.
  WindowPair window_pair(const GridSpec& grid) const;

  /// p' on the window nodes, i.e. the window part of A y for y = window_pair().
  Samples<double> window_derivative(const GridSpec& grid) const;

  /// Right derivative of L_t gamma on the window nodes: 0 before -t, gamma'(t + s) after.
  Samples<double> extension_derivative(const GridSpec& grid, double t) const;

 private:
  AnalyticPath(Shape shape, double offset, double p1, double p2) : shape_(shape), offset_(offset), p1_(p1), p2_(p2) {}

  Shape shape_;
  double offset_;
  double p1_;
  double p2_;
};

}  // namespace pathkolm
