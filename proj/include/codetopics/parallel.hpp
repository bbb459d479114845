#pragma once

#include <cstddef>
#include <functional>

namespace codetopics {

// Calls fn(i) for every i in [0, n) on at most max_workers threads. The
// first exception thrown by fn is rethrown once all workers have finished.
void parallel_for(std::size_t n, std::size_t max_workers, const std::function<void(std::size_t)>& fn);

// Worker count for data-parallel numeric loops.
std::size_t default_workers();

}  // namespace codetopics
