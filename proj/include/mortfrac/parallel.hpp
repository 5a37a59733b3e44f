#pragma once

#include <cstddef>
#include <functional>

namespace mortfrac {

/// Worker count: MORTFRAC_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs body(begin, end) over static contiguous chunks of [0, n). The first
/// exception thrown by any chunk is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mortfrac
