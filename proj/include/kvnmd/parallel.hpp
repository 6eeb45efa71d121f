#pragma once

#include <cstddef>
#include <functional>

namespace kvnmd {

// Process-wide worker count used by parallel_for. 0 means "hardware".
void set_worker_count(int n);
int worker_count();

// Runs fn(i) for i in [0, n) on the worker pool with a static block
// partition. Callers must only write to disjoint state per index, which keeps
// results bitwise independent of the schedule and of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Block variant: fn(begin, end) per contiguous chunk; cheaper for tight loops.
void parallel_for_blocks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace kvnmd
