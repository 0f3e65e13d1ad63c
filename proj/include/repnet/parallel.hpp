#pragma once

#include <cstddef>
#include <functional>

namespace repnet {

// Worker count used by the parallel scans. Reads REPNET_WORKERS on first use,
// falls back to the hardware concurrency.
std::size_t worker_count();
void set_worker_count(std::size_t n);

// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
// visited exactly once; callers write results into per-index slots so the
// merge is independent of scheduling.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace repnet
