#pragma once

#include <cstddef>
#include <functional>

namespace spectra {

/// Worker count: SPECTRA_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
std::size_t worker_count();

/// Calls fn(i) for i in [0, n) across worker threads, static contiguous
/// chunks. fn must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace spectra
