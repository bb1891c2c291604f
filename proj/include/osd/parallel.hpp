#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace osd {

// Worker cap from OSD_THREADS (positive integer), else hardware concurrency.
std::size_t default_worker_count();

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = default). Each
// index is visited exactly once; callers write results into pre-sized slots
// so the outcome does not depend on scheduling. The first exception thrown by
// any task is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

// SplitMix64 finaliser, used to derive per-item seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace osd
