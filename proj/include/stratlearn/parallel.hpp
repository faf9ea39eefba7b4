#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace stratlearn {

// Chunked index-parallel loop. Work items must be independent; callers keep
// determinism by deriving per-index RNG streams, so the thread count never
// changes results.
template <typename Fn>
void parallel_for(std::int64_t n, int n_threads, Fn&& fn) {
  n_threads = std::max(1, n_threads);
  if (n_threads == 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = int(std::min<std::int64_t>(n_threads, n));
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors{std::size_t(workers)};
  for (int w = 0; w < workers; ++w) {
    const std::int64_t begin = std::int64_t(w) * chunk;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&fn, &errors, w, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[std::size_t(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace stratlearn
