#pragma once

#include <cstddef>
#include <functional>

namespace hystherm {

/// Number of worker threads for independent jobs; the HYSTHERM_THREADS
/// environment variable caps it (1 disables parallelism).
unsigned max_parallel_jobs();

/// Run fn(0..n-1) across up to max_parallel_jobs() threads. Results must be
/// written to per-index slots; the first exception (by index) is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hystherm
