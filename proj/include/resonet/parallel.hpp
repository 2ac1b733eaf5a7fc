#pragma once

#include <cstddef>
#include <functional>

namespace resonet {

/// Worker cap: RESONET_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Calls fn(i) for i in [0, n) across up to worker_count() threads. Each index
/// is visited exactly once; callers write results by index, so output order
/// never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

} // namespace resonet
