#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fts {

// Caps worker counts for all parallel loops. 0 means hardware concurrency.
inline int& max_threads() {
  static int n = 0;
  return n;
}

// Nested parallel_for calls run serially to avoid oversubscription.
inline int& parallel_depth() {
  thread_local int depth = 0;
  return depth;
}

inline int effective_threads(std::size_t items) {
  int n = max_threads();
  if (n <= 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  if (static_cast<std::size_t>(n) > items) n = static_cast<int>(items);
  return n < 1 ? 1 : n;
}

// Runs fn(i) for i in [0, count). Each index writes only to its own output
// slot, so results are independent of the worker count and of scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  if (count == 0) return;
  const int workers =
      parallel_depth() > 0 ? 1 : effective_threads(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    ++parallel_depth();
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        break;
      }
    }
    --parallel_depth();
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace fts
