#pragma once

#include <cstddef>
#include <functional>

namespace dbmi {

// Worker count from the DBMI_THREADS environment variable; defaults to 1.
int thread_count();

// Runs fn(begin, end, chunk_index) over fixed-size chunks of [0, n).
// Chunk boundaries depend only on n, never on the worker count, so callers
// that reduce per-chunk results in chunk order get identical output for any
// DBMI_THREADS setting.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn);

std::size_t num_chunks(std::size_t n, std::size_t chunk_size);

}  // namespace dbmi
