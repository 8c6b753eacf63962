#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tailsgd {

// Runs fn(i) for i in [0, n_items) across `threads` workers pulling from a
// shared atomic counter. The first exception thrown by any worker is rethrown
// on the calling thread after all workers join. threads <= 1 runs serially.
// Callers are responsible for making fn(i) write only to slot i of any shared
// output so results do not depend on the thread count.
inline void parallel_for(long n_items, int threads,
                         const std::function<void(long)>& fn) {
  if (n_items <= 0) return;
  if (threads <= 1 || n_items == 1) {
    for (long i = 0; i < n_items; ++i) fn(i);
    return;
  }
  if (threads > n_items) threads = static_cast<int>(n_items);

  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      if (failed.load(std::memory_order_relaxed)) return;
      const long i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n_items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Thread-count resolution: explicit CLI value wins, then the TAILSGD_THREADS
// environment variable, then hardware concurrency; always at least 1.
inline int resolve_threads(int cli_value) {
  if (cli_value > 0) return cli_value;
  if (const char* env = std::getenv("TAILSGD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace tailsgd
