#pragma once

#include <cstddef>
#include <functional>

namespace marbayes {

// Worker count from MARBAYES_WORKERS, else the hardware concurrency (at
// least 1). Throws std::invalid_argument on a malformed value.
std::size_t worker_count();

// Runs fn(i) for i in [0, n) on up to `workers` threads. Tasks are handed out
// in index order; the first exception thrown by any task is rethrown after
// all threads join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace marbayes
