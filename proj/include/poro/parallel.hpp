#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace poro {

/// Runs fn(0..n-1) on up to `workers` threads (<=1 means serial). Tasks own
/// disjoint output slots, so results are independent of scheduling; callers
/// handle per-task exceptions inside fn.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace poro
