#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace pathkolm {

/// splitmix64 finaliser applied to root + (index + 1) * golden gamma.
/// Per-path seeds are mix_seed(root_seed, path_index), which makes every
/// estimate independent of how paths are scheduled.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index) noexcept;

struct MCEstimate {
  double mean = 0.0;
  /// sample standard deviation / sqrt(n)
  double std_error = 0.0;
  long n_samples = 0;
  std::uint64_t root_seed = 0;
};

/// Mean and standard error of `samples`, summed in index order.
MCEstimate make_estimate(const Eigen::Ref<const Eigen::VectorXd>& samples, std::uint64_t root_seed);

/// Per-path values that share a root seed; the unit of noise coupling.
struct PathSamples {
  std::uint64_t root_seed = 0;
  Eigen::VectorXd values;

  MCEstimate estimate() const { return make_estimate(values, root_seed); }
};

/// Runs body(i) for i in [0, n) on `threads` workers with a static partition.
/// Results must be written to index-addressed storage by the body; with that
/// discipline the outcome does not depend on the thread count. The first
/// exception thrown by any worker is rethrown on the caller.
void parallel_for(long n, int threads, const std::function<void(long)>& body);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pathkolm
