#pragma once

#include <cstddef>
#include <functional>

namespace lpdm {

/// Worker count taken from LPDM_THREADS (default 1). Read once per process.
int thread_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks, so
/// body must only write to per-index state. Reductions stay with the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lpdm
