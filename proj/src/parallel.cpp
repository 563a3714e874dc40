#include "freqadv/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace freqadv {

namespace {
std::atomic<int> g_workers{0};  // 0 = pick from hardware
}

void set_worker_threads(int count) { g_workers.store(std::max(0, count)); }

int worker_threads() {
  int w = g_workers.load();
  if (w > 0) return w;
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 8u));
}

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_threads(), count);
  if (workers <= 1 || count < 4) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::atomic<int> next{0};
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace freqadv
