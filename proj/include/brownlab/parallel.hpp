#pragma once

#include <cstddef>
#include <functional>

namespace brownlab {

// Worker count: explicit override if set, else BROWNLAB_THREADS, else hardware concurrency.
int worker_count();
void set_worker_count(int n);  // n <= 0 clears the override

// Runs body(i) for i in [0, n) on worker_count() threads with a static partition.
// Callers write to per-index slots, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace brownlab
