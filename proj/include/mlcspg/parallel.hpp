#pragma once

#include <cstddef>
#include <functional>

namespace mlcspg {

/// Thread count from MLCSPG_THREADS, else the hardware concurrency (at least 1).
unsigned default_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers using contiguous
/// blocks. Bodies must write only to slots owned by their index. If bodies
/// throw, the exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace mlcspg
