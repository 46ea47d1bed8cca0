#include "pathkolm/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "pathkolm/errors.hpp"

namespace pathkolm {

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index) noexcept {
  std::uint64_t z = root + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MCEstimate make_estimate(const Eigen::Ref<const Eigen::VectorXd>& samples, std::uint64_t root_seed) {
  MCEstimate e;
  e.root_seed = root_seed;
  e.n_samples = samples.size();
  if (samples.size() == 0) return e;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < samples.size(); ++i) sum += samples[i];
  e.mean = sum / samples.size();
  if (samples.size() > 1) {
    double ss = 0.0;
    for (Eigen::Index i = 0; i < samples.size(); ++i) ss += (samples[i] - e.mean) * (samples[i] - e.mean);
    e.std_error = std::sqrt(ss / (samples.size() - 1) / samples.size());
  }
  return e;
}

void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  const long workers = std::clamp<long>(threads, 1, std::max<long>(1, n));
  if (workers == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (long w = 0; w < workers; ++w) {
    const long begin = n * w / workers;
    const long end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (long i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("slope fit needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace pathkolm
