#pragma once

#include <cstddef>
#include <functional>

namespace bdia {

// Runs body(i) for i in [0, count) on up to `workers` threads.  Work is split
// into contiguous chunks; callers write results into per-index slots, so the
// output never depends on the worker count.  The first exception thrown by
// any body is rethrown on the calling thread.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace bdia
