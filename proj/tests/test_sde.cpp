#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "pathkolm/analytic_path.hpp"
#include "pathkolm/sde.hpp"

using namespace pathkolm;

namespace {

double buffer_gap(const Trajectory& a, const Trajectory& b) { return (a.buffer() - b.buffer()).cwiseAbs().maxCoeff(); }

WindowPair smooth_pair(const GridSpec& grid) { return AnalyticPath::cosine(0.3, 0.4, 2.0).window_pair(grid); }

}  // namespace

TEST_CASE("noise draws agree on shared rows whatever their start") {
  const GridSpec grid(1.0, 64, 2);
  const NoiseDraw full(grid, 42, 0);
  const NoiseDraw late(grid, 42, 20);
  CHECK(late.increments().topRows(20).norm() == 0.0);
  CHECK((late.increments().bottomRows(44) - full.increments().bottomRows(44)).norm() == 0.0);
  const NoiseDraw coarse = full.coarsened(4);
  CHECK(coarse.grid().steps() == 16);
  CHECK(coarse.increments()(3, 1) ==
        doctest::Approx(full.increments().block(12, 1, 4, 1).sum()).epsilon(1e-15));
  const NoiseDraw neg = full.negated(10, 14);
  CHECK(neg.increments().row(11) == -full.increments().row(11));
  CHECK(neg.increments().row(14) == full.increments().row(14));
}

TEST_CASE("zero drift gives a random walk") {
  const GridSpec grid(1.0, 100, 1);
  const SDEConfig config(grid, 1.0);
  const NoiseDraw noise(grid, 9);
  const WindowPair y0 = WindowPair::constant(grid, Vector::Constant(1, 0.7));
  const Trajectory y = simulate(config, FunctionalSpec::zero(), y0, noise);
  CHECK(y.state(100)[0] == doctest::Approx(0.7 + noise.increments().sum()).epsilon(1e-13));
}

TEST_CASE("endpoint-linear drift follows the Euler product and converges at order one") {
  const double c = -0.8;
  const double x = 1.5;
  std::vector<double> dts;
  std::vector<double> errs;
  for (int n : {50, 100, 200, 400}) {
    const GridSpec grid(1.0, n, 1);
    const SDEConfig config(grid, 0.0);
    const Trajectory y = simulate(config, FunctionalSpec::endpoint_linear(Eigen::MatrixXd::Constant(1, 1, c)),
                                  WindowPair::constant(grid, Vector::Constant(1, x)), NoiseDraw(grid, 1));
    CHECK(y.state(n)[0] == doctest::Approx(x * std::pow(1.0 + c * grid.dt(), n)).epsilon(1e-12));
    dts.push_back(grid.dt());
    errs.push_back(std::abs(y.state(n)[0] - x * std::exp(c)));
  }
  CHECK(loglog_slope(dts, errs) >= 0.9);
}

TEST_CASE("integral drift with g = 1 gives t^2 / 2") {
  for (int n : {64, 128}) {
    const GridSpec grid(1.0, n, 1);
    const Trajectory y = simulate(SDEConfig(grid, 0.0), FunctionalSpec::integral("one"), WindowPair::zero(grid),
                                  NoiseDraw(grid, 1));
    for (int k = 0; k <= n; ++k) CHECK(std::abs(y.state(k)[0] - 0.5 * grid.time(k) * grid.time(k)) <= grid.dt());
  }
}

TEST_CASE("trajectory starting late keeps absolute noise times") {
  const GridSpec grid(1.0, 32, 1);
  const NoiseDraw noise(grid, 5, 8);
  const SDEConfig config = SDEConfig(grid, 1.0).starting_at(8);
  const Trajectory y = simulate(config, FunctionalSpec::zero(), WindowPair::zero(grid), noise);
  CHECK(y.start_node() == 8);
  CHECK(y.state(32)[0] == doctest::Approx(noise.increments().bottomRows(24).sum()).epsilon(1e-13));
  const ForwardPath p = y.forward_path();
  CHECK(p.size() == 33);
  std::ostringstream os;
  y.write_csv(os);
  CHECK(os.str().rfind("node_time,X_1\n", 0) == 0);
}

TEST_CASE("divergence guard") {
  const GridSpec grid(1.0, 10, 1);
  CHECK_THROWS_AS(simulate(SDEConfig(grid, 0.0), FunctionalSpec::endpoint_linear(Eigen::MatrixXd::Constant(1, 1, 1e4)),
                           WindowPair::constant(grid, Vector::Ones(1)), NoiseDraw(grid, 1)),
                  SimulationDiverged);
}

TEST_CASE("stochastic convolution") {
  const GridSpec grid(1.0, 64, 2);
  const SDEConfig config(grid, Vector((Vector(2) << 1.0, 0.5).finished()));
  const NoiseDraw noise(grid, 3);
  const WindowPair z0 = stochastic_convolution(config, noise, 0.25, 0.25);
  CHECK(norm_sup(z0) == 0.0);
  const WindowPair z = stochastic_convolution(config, noise, 0.25, 0.75);
  CHECK(z.pair_class() == PairClass::continuous);
  for (int j = 0; j < 64; ++j)
    if (grid.window_time(j) <= 0.25 - 0.75 + 1e-12) CHECK(z.window().row(j).norm() == 0.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const NoiseDraw w(grid, seed, 16);
    const WindowPair y0 = smooth_pair(grid);
    const Trajectory y = simulate(config.starting_at(16), FunctionalSpec::zero(), y0, w);
    for (int k = 16; k <= 64; ++k) {
      const WindowPair diff = y.lifted_state(k) - semigroup_shift(y0, grid.time(k) - 0.25) -
                              stochastic_convolution(config, w, 0.25, grid.time(k));
      CHECK(norm_sup(diff) <= 1e-12);
    }
  }
}

TEST_CASE("deterministic convolution") {
  const GridSpec grid(1.0, 40, 1);
  const SDEConfig config(grid, 1.0);
  const NoiseDraw noise(grid, 4);
  const WindowPair y0 = WindowPair::constant(grid, Vector::Constant(1, 0.6));
  const Trajectory y = simulate(config, FunctionalSpec::zero(), y0, noise);
  CHECK(norm_sup(deterministic_convolution(config, FunctionalSpec::zero(), y, 0.0, 0.5)) == 0.0);

  // b_t(gamma) = gamma(0): a constant drift c = 0.6 along any path started from the constant pair.
  const Drift constant = FunctionalSpec::discrete_sampling({0.0}, SamplingMap::sum);
  const Trajectory yc = simulate(config, constant, y0, noise);
  const WindowPair f = deterministic_convolution(config, constant, yc, 0.0, 0.5);
  CHECK(f.endpoint()[0] == doctest::Approx(0.6 * 0.5).epsilon(1e-13));
  for (int j = 0; j < 40; ++j)
    CHECK(f.window()(j, 0) == doctest::Approx(0.6 * std::max(0.5 + grid.window_time(j), 0.0)).epsilon(1e-12));
}

TEST_CASE("mild residual is first order in dt") {
  const int finest = 256;
  const GridSpec fine(1.0, finest, 1);
  std::vector<double> res(3, 0.0);
  const Drift drift = FunctionalSpec::integral("sin");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NoiseDraw base(fine, seed);
    for (int l = 0; l < 3; ++l) {
      const int n = 64 << l;
      const GridSpec grid(1.0, n, 1);
      const SDEConfig config(grid, 1.0);
      const NoiseDraw noise = base.coarsened(finest / n);
      const WindowPair y0 = smooth_pair(grid);
      const Trajectory y = simulate(config, drift, y0, noise);
      res[l] += norm_sup(mild_residual(config, drift, y0, noise, y, 1.0)) / 20.0;
      CHECK(norm_sup(mild_residual(config, drift, y0, noise, y, 1.0, ConvolutionRule::left_point)) <= 1e-12);
    }
  }
  CHECK(res[1] / res[0] == doctest::Approx(0.5).epsilon(0.2));
  CHECK(res[2] / res[1] == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("lifted states of a C_hat start stay in C_hat") {
  const GridSpec grid(1.0, 32, 2);
  const Trajectory y = simulate(SDEConfig(grid, 1.0), FunctionalSpec::integral("sin"), smooth_pair(
                                    GridSpec(1.0, 32, 2)), NoiseDraw(grid, 8));
  for (int k = 0; k <= 32; ++k) CHECK(y.lifted_state(k).pair_class() == PairClass::continuous);
}

TEST_CASE("first variation") {
  const GridSpec grid(1.0, 64, 1);
  const SDEConfig config(grid, 1.0);
  const NoiseDraw noise(grid, 12);
  const WindowPair y0 = smooth_pair(grid);
  const WindowPair k = AnalyticPath::linear(0.5, 1.0).window_pair(grid);

  const Trajectory xi0 = first_variation(config, FunctionalSpec::zero(), y0, noise, k);
  for (int j = 0; j <= 64; j += 8) {
    const WindowPair shifted = semigroup_shift(k, grid.time(j));
    CHECK((xi0.lifted_state(j).window() - shifted.window()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(xi0.state(j) == shifted.endpoint());
  }

  const Drift drift = FunctionalSpec::integral("sin");
  const Trajectory y = simulate(config, drift, y0, noise);
  const Trajectory xi = first_variation(config, drift, y, k);
  std::vector<double> eps{1e-1, 1e-2, 1e-3};
  std::vector<double> err;
  for (double e : eps) {
    const Trajectory ye = simulate(config, drift, y0 + e * k, noise);
    err.push_back(((ye.buffer() - y.buffer()) / e - xi.buffer()).cwiseAbs().maxCoeff());
  }
  CHECK(loglog_slope(eps, err) == doctest::Approx(1.0).epsilon(0.1));

  double ratio = 0.0;
  for (double scale : {0.1, 1.0, 3.0}) {
    const WindowPair ks = scale * k;
    const Trajectory x = first_variation(config, drift, y, ks);
    double sup = 0.0;
    for (int j = 0; j <= 64; ++j) sup = std::max(sup, norm_sup(x.lifted_state(j)));
    ratio = std::max(ratio, sup / norm_sup(ks));
  }
  CHECK(ratio <= std::exp(1.0) * 2.0);
}

TEST_CASE("flow is Lipschitz in the initial condition, stably in dt") {
  std::vector<double> constants;
  for (int n : {32, 64, 128}) {
    const GridSpec grid(1.0, n, 1);
    const SDEConfig config(grid, 1.0);
    const NoiseDraw noise(grid, 77);
    const Drift drift = FunctionalSpec::integral("sin");
    const WindowPair y0 = smooth_pair(grid);
    const Trajectory y = simulate(config, drift, y0, noise);
    double c = 0.0;
    for (double scale : {0.01, 0.1, 0.5}) {
      const WindowPair k = scale * AnalyticPath::cosine(1.0, 0.5, 3.0).window_pair(grid);
      const Trajectory yk = simulate(config, drift, y0 + k, noise);
      c = std::max(c, (yk.buffer() - y.buffer()).cwiseAbs().maxCoeff() / norm_sup(k));
    }
    constants.push_back(c);
  }
  CHECK(std::isfinite(constants.back()));
  CHECK(*std::max_element(constants.begin(), constants.end()) <=
        1.5 * *std::min_element(constants.begin(), constants.end()));
}

TEST_CASE("second variation") {
  const GridSpec grid(1.0, 64, 1);
  const SDEConfig config(grid, 1.0);
  const NoiseDraw noise(grid, 21);
  const WindowPair y0 = smooth_pair(grid);
  const WindowPair h = AnalyticPath::linear(0.5, 1.0).window_pair(grid);
  const WindowPair k = AnalyticPath::cosine(1.0, 0.5, 2.0).window_pair(grid);

  for (const auto& linear : {FunctionalSpec::integral("linear"), FunctionalSpec::zero()}) {
    const Trajectory eta = second_variation(config, linear, y0, noise, h, k);
    CHECK(eta.buffer().cwiseAbs().maxCoeff() == 0.0);
  }

  for (const auto& spec : {FunctionalSpec::integral("sin"), FunctionalSpec::integral("abs_pow_2_5")}) {
    const Drift drift = spec;
    const Trajectory hk = second_variation(config, drift, y0, noise, h, k);
    const Trajectory kh = second_variation(config, drift, y0, noise, k, h);
    CHECK(buffer_gap(hk, kh) <= 1e-10);

    const Trajectory y = simulate(config, drift, y0, noise);
    const Trajectory xi = first_variation(config, drift, y, k);
    const Trajectory eta = second_variation(config, drift, y, xi, xi);
    std::vector<double> eps{1e-1, 1e-2, 1e-3};
    std::vector<double> rem;
    for (double e : eps) {
      const Trajectory ye = simulate(config, drift, y0 + e * k, noise);
      rem.push_back((ye.buffer() - y.buffer() - e * xi.buffer() - 0.5 * e * e * eta.buffer()).cwiseAbs().maxCoeff());
    }
    CHECK(loglog_slope(eps, rem) >= 2.0 + spec.alpha - 0.15);
  }
}
