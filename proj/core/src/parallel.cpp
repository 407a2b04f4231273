#include "dbmi/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dbmi {

int thread_count() {
  static const int cached = [] {
    const char* env = std::getenv("DBMI_THREADS");
    if (env == nullptr) return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1;
    if (v > 256) return 256;
    return static_cast<int>(v);
  }();
  return cached;
}

std::size_t num_chunks(std::size_t n, std::size_t chunk_size) {
  return chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t,
                                              std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t chunks = num_chunks(n, chunk_size);
  const int workers = thread_count();
  if (workers == 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t begin = c * chunk_size;
      const std::size_t end = begin + chunk_size < n ? begin + chunk_size : n;
      fn(begin, end, c);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::size_t begin = c * chunk_size;
      const std::size_t end = begin + chunk_size < n ? begin + chunk_size : n;
      fn(begin, end, c);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t spawn =
      static_cast<std::size_t>(workers) < chunks
          ? static_cast<std::size_t>(workers)
          : chunks;
  pool.reserve(spawn);
  for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace dbmi
