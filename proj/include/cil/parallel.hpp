#pragma once

#include <cstddef>
#include <functional>

namespace cil {

// Thread count for scoring: `requested` when non-zero, else $CIL_THREADS, else 1.
unsigned resolve_thread_count(unsigned requested = 0);

// Splits [0, n) into contiguous shards, one per thread, and runs fn(begin, end, shard) on each.
void parallel_shards(std::size_t n, unsigned threads,
                     const std::function<void(std::size_t, std::size_t, unsigned)>& fn);

}  // namespace cil
