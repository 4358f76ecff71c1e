#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace siamte {

/// Runs fn(0..n-1) on up to `jobs` worker threads. Results must not depend on
/// execution order; the first exception wins and is rethrown on the caller.
inline void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  if (jobs <= 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t workers = std::min<size_t>(size_t(jobs), n);
  std::atomic<size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error) return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t t = 0; t < workers; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace siamte
