#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace fbmlab {

/// Caps the worker count used by ensemble loops; 0 restores the default.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n), possibly in parallel. Each index must own
/// its outputs. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fbmlab
