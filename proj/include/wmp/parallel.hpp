#pragma once
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace wmp {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Static block partition of [0, n); fn(thread_index, begin, end).
// Workers write to disjoint index ranges, so results do not depend on
// scheduling order.
inline void parallel_blocks(std::size_t n, int threads,
                            const std::function<void(int, std::size_t, std::size_t)>& fn) {
  const int t = resolve_threads(threads);
  if (t <= 1 || n <= 1) {
    fn(0, 0, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(t, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] { fn(static_cast<int>(w), lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace wmp
