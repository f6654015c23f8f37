#pragma once

#include <cstddef>
#include <functional>

namespace graphon {

/// Upper bound on worker threads used by chunked loops. Defaults to 1.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs body(begin, end, chunk_index) over [0, n) split into fixed-size
/// chunks. Chunk boundaries depend only on n and chunk_size, so callers that
/// store one partial result per chunk and combine them in chunk order get
/// identical results for every thread count.
void for_each_chunk(
    std::size_t n, std::size_t chunk_size,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

}  // namespace graphon
