// parallel.hpp: a small worker pool for independent parameter samples.

#pragma once

#include <cstddef>
#include <functional>

namespace sturmian {

/// Worker count: `requested` if nonzero, else STURMIAN_THREADS, else the
/// hardware concurrency. STURMIAN_THREADS also caps an explicit request.
std::size_t worker_count(std::size_t requested = 0);

/// Runs body(i) for i in [0, n). Each index writes only its own result slot, so
/// the outcome does not depend on scheduling. The exception of the lowest
/// failing index is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace sturmian
