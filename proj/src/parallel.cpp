#include "graphon/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace graphon {

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned threads) { g_threads = std::max(1u, threads); }

unsigned thread_count() { return g_threads; }

void for_each_chunk(
    std::size_t n, std::size_t chunk_size,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t chunks = chunk_count(n, chunk_size);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c)
      body(c * chunk_size, std::min(n, (c + 1) * chunk_size), c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      try {
        body(c * chunk_size, std::min(n, (c + 1) * chunk_size), c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace graphon
