#pragma once

#include <cstddef>
#include <functional>

namespace tweedie {

/// Worker cap: TWEEDIE_LAB_THREADS if set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
unsigned thread_limit();

/// Runs body(i) for i in [0, n) on up to thread_limit() threads. Each index
/// runs exactly once; results written by index are therefore independent of
/// scheduling. The exception from the lowest failing index is rethrown after all
/// workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tweedie
