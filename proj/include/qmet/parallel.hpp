#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace qmet {

// Worker count: QMET_THREADS if set (>= 1), else hardware concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, count) on up to worker_count() threads. Results
// must be written by index; the first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Independent per-task seed (splitmix64 of seed and index), so task streams
// do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace qmet
