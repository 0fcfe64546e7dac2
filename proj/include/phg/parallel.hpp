#pragma once

#include <cstddef>
#include <functional>

namespace phg {

/// Worker count: GSL_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Splits [0, n) into contiguous chunks, one per worker. fn(begin, end, worker)
/// runs on each chunk; the first exception thrown is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& fn);

}  // namespace phg
