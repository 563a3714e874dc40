#pragma once

#include <functional>

namespace freqadv {

// Worker cap for batch-parallel loops (training gradients, per-example
// attacks). Results are always written to per-index slots and reduced in
// index order, so outputs do not depend on the thread count or schedule.
void set_worker_threads(int count);
int worker_threads();

// Runs fn(i) for i in [0, count) across the worker pool with static
// chunking. Falls back to a plain loop for small counts.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace freqadv
