#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace slf {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Worker count used by the parallel loops. 0 means hardware parallelism.
inline void set_thread_count(int threads) { detail::thread_setting() = std::max(threads, 0); }

inline int thread_count() {
  const int t = detail::thread_setting();
  if (t > 0) return t;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs body(i) for i in [0, count). Work is handed out in contiguous blocks;
/// callers write results into per-index slots so the outcome does not depend
/// on scheduling. If several indices throw, the exception of the lowest one
/// is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body, int threads = 0) {
  if (threads <= 0) threads = thread_count();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t block = std::max<std::size_t>(1, count / (workers * 8));
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t start = next.fetch_add(block);
      if (start >= count) return;
      const std::size_t stop = std::min(count, start + block);
      for (std::size_t i = start; i < stop; ++i) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (i < failed_index) {
            failed_index = i;
            failure = std::current_exception();
          }
          break;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace slf
