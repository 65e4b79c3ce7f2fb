#pragma once

#include <cstddef>
#include <functional>

namespace gridcount {

// Worker cap read from GRIDCOUNT_THREADS (unset or 0 = hardware concurrency).
std::size_t worker_count();

// Runs body(begin, end) over a static partition of [0, n). Each index is
// handled by exactly one call, so results never depend on the worker
// count as long as iterations write disjoint outputs. The first exception
// thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace gridcount
