// Deterministic data parallelism: work items run on a bounded thread pool,
// results land in index-addressed slots, reductions happen in index order.
// MOPMEMM_THREADS caps the pool; unset means single-threaded.
#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mopmemm {

inline int max_threads() {
  const char* env = std::getenv("MOPMEMM_THREADS");
  if (!env) return 1;
  try {
    const int n = std::stoi(env);
    if (n < 1) return 1;
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    return hw > 0 ? std::min(n, hw) : n;
  } catch (const std::exception&) {
    return 1;
  }
}

// Runs f(i) for i in [0, n); f must only write state owned by index i.
template <typename F>
void parallel_for(int n, F&& f) {
  const int threads = std::min(max_threads(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (int i = t; i < n; i += threads) f(i);
    });
  }
  for (std::thread& th : pool) th.join();
}

}  // namespace mopmemm
