#pragma once

#include <cstddef>
#include <functional>

namespace voxelnet {

// Resolves a requested thread count: 0 means all hardware threads; the
// VOXELNET_THREADS environment variable, when set, caps the result. Always
// returns at least 1.
unsigned effective_threads(unsigned requested);

// Runs fn(0..count-1), statically chunked over the given number of threads.
// Work items must write to disjoint state; results are then independent of
// the thread count.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace voxelnet
