#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace agsfh::detail {

/// Runs fn(begin, end) over contiguous chunks of [0, n). Results must be
/// written to disjoint locations; the first exception thrown is rethrown.
template <typename Fn>
void parallel_for(Eigen::Index n, int threads, Fn&& fn) {
  const Eigen::Index workers = std::clamp<Eigen::Index>(threads, 1, std::max<Eigen::Index>(n, 1));
  if (workers == 1) {
    fn(Eigen::Index{0}, n);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Eigen::Index chunk = (n + workers - 1) / workers;
  for (Eigen::Index w = 0; w < workers; ++w) {
    const Eigen::Index begin = w * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace agsfh::detail
