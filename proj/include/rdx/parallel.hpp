#pragma once

#include <cstddef>
#include <functional>

namespace rdx {

// Worker count used by parallel_for. Defaults to the hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count() noexcept;

// Calls body(i) for every i in [0, n). Bodies must only write to per-index
// state; callers reduce afterwards in index order so results are identical
// for every thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rdx
