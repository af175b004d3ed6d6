#pragma once

#include <cstddef>
#include <functional>

namespace pll {

// Upper bound on worker threads for row-parallel loops; 0 selects hardware concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Calls fn(begin, end) over disjoint contiguous chunks of [0, n). Each index is
// visited exactly once; callers must not reduce across chunks inside fn.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace pll
