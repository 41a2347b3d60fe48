#pragma once

#include <cstddef>
#include <functional>

namespace ktube::parallel {

/// Worker cap used by every data-parallel loop in the library. Defaults to 1.
void set_threads(unsigned n);
unsigned threads();

/// Runs body(i) for i in [begin, end). Iterations are split into contiguous
/// chunks; each index is visited exactly once, so per-index results do not
/// depend on the thread count.
void for_each_index(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

/// Same as for_each_index but hands each worker a contiguous [lo, hi) chunk.
/// `chunk_id` is stable for a given (range, thread count) pair.
void for_each_chunk(std::size_t begin, std::size_t end,
                    const std::function<void(std::size_t chunk_id, std::size_t lo, std::size_t hi)>& body);

/// Number of chunks for_each_chunk will use for a range of length n.
std::size_t chunk_count(std::size_t n);

}  // namespace ktube::parallel
