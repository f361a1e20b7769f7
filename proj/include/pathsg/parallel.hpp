#pragma once

#include <cstddef>
#include <functional>

namespace pathsg {

// Worker count from PATHSG_THREADS (default: hardware concurrency).
std::size_t thread_count();

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so
// reductions stay independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace pathsg
