#pragma once

#include <cstddef>
#include <functional>

namespace periodic_heat {

/// Worker count: hardware concurrency capped by PERIODIC_HEAT_THREADS.
unsigned worker_count();

/// Runs body(i) for i in [0, n) across worker_count() threads. Exceptions
/// thrown by body are rethrown on the calling thread (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace periodic_heat
