#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace floodbench::util {

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
// depend only on n and `grain`, never on the thread count, so any reduction
// done per chunk and combined in chunk order is reproducible.
template <typename Body>
void parallel_chunks(std::size_t n, std::size_t grain, unsigned threads, Body&& body) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t chunks = (n + grain - 1) / grain;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));

  auto run_chunk = [&](std::size_t chunk) {
    const std::size_t begin = chunk * grain;
    body(chunk, begin, std::min(n, begin + grain));
  };
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    return;
  }

  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t chunk;
      {
        std::lock_guard lock(mu);
        if (next >= chunks || failure) return;
        chunk = next++;
      }
      try {
        run_chunk(chunk);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace floodbench::util
