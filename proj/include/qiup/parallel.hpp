#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace qiup {

/// Process-wide worker count. Reads QIUP_THREADS on first use, falls back to
/// hardware concurrency.
inline unsigned& thread_count_ref() {
  static unsigned n = [] {
    if (const char* env = std::getenv("QIUP_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
  }();
  return n;
}
inline unsigned thread_count() { return thread_count_ref(); }
inline void set_thread_count(unsigned n) { thread_count_ref() = std::max(1u, n); }

inline bool& inside_worker() {
  thread_local bool flag = false;
  return flag;
}

/// Runs body(i) for i in [0, n). Each index is processed by exactly one worker
/// and writes only its own output slot, so results do not depend on scheduling.
/// Nested calls run inline on the calling worker.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers =
      inside_worker() ? 1u : static_cast<unsigned>(std::min<std::size_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mtx;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      inside_worker() = true;
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(mtx);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace qiup
