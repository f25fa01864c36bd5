#pragma once

#include <cstddef>
#include <functional>

namespace cqrf {

// Thread-count resolution: requested > 0 wins, then the CQRF_THREADS
// environment variable, then std::thread::hardware_concurrency().
int resolve_threads(int requested);

// Runs body(i) for i in [0, count). Work items must be independent and
// deterministic on their own; the schedule is unspecified. The first
// exception thrown by a body is rethrown on the calling thread.
void parallel_for(std::size_t count, int n_threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace cqrf
