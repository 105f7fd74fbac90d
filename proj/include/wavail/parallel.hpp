#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace wavail {

/// Worker count from WAVAIL_THREADS (0 or unset = hardware concurrency).
inline std::size_t worker_count() {
  std::size_t n = 0;
  if (const char* env = std::getenv("WAVAIL_THREADS"); env != nullptr && *env != '\0') {
    try {
      n = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      n = 0;
    }
  }
  if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return n;
}

/// Evaluates `fn(i)` for i in [0, count) on up to `workers` threads.
///
/// Results are stored by index, so callers that reduce the returned vector
/// in order get bit-identical output for any worker count. The first
/// exception thrown by any work item is rethrown on the calling thread.
template <typename Fn>
auto parallel_map(std::size_t count, Fn&& fn, std::size_t workers = worker_count())
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<Result> results(count);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));

  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace wavail
