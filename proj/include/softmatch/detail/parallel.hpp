#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace softmatch::detail {

// Runs fn(task) for task in [0, tasks) on up to `threads` threads. Task
// boundaries are fixed by the caller, so results never depend on the
// thread count as long as each task writes only its own outputs.
template <typename Fn>
void parallel_for(std::size_t tasks, int threads, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(tasks, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) fn(t);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= tasks) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(tasks, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(body);
  body();
  pool.clear();  // joins
  if (error) std::rethrow_exception(error);
}

}  // namespace softmatch::detail
