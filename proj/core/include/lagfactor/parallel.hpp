#pragma once

#include <cstddef>
#include <functional>

namespace lagfactor {

/// Runs body(i) for i in [0, count) on up to `threads` worker threads.
/// Indices are split into contiguous chunks; body must not share mutable
/// state across indices. The first exception thrown is rethrown on the
/// calling thread after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

} // namespace lagfactor
