#pragma once

#include <cstddef>
#include <functional>

namespace openad {

/// Thread count from OPENAD_THREADS, else hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots and
/// reduce them in index order afterwards. The first exception thrown by any
/// worker is rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace openad
