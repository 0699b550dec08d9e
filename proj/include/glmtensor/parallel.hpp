#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace glmtensor {

inline int default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on up to n_threads workers. Results must be
/// written to per-index slots; assembly order is then deterministic
/// regardless of scheduling. fn must not throw across the thread boundary
/// untracked (catch inside and record per index).
template <class Fn>
void parallel_for(std::size_t count, int n_threads, Fn&& fn) {
  if (n_threads <= 0) n_threads = default_thread_count();
  if (n_threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(n_threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, w, workers, count] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace glmtensor
