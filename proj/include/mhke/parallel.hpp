#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mhke {

/// Runs fn(i) for i in [0, n) on at most `parallelism` threads. The first
/// exception thrown by fn is rethrown after all workers finish.
template <typename Fn>
void parallel_for(size_t n, size_t parallelism, Fn&& fn) {
  if (n == 0) return;
  parallelism = std::max<size_t>(1, std::min(parallelism, n));
  if (parallelism == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(parallelism);
    for (size_t t = 0; t < parallelism; ++t) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mhke
