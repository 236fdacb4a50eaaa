#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bogolab {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Worker count: explicit override, else BOGOLAB_THREADS, else hardware concurrency.
inline int worker_count() {
  if (const int forced = detail::thread_override().load(); forced > 0) return forced;
  if (const char* env = std::getenv("BOGOLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline void set_worker_count(int n) { detail::thread_override().store(n > 0 ? n : 0); }

/// Calls fn(i) for i in [0, n). Each index must write only its own output slot,
/// so results never depend on the worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bogolab
