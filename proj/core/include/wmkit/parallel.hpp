#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wmkit {

/// Number of fixed-size chunks covering `count` items.
inline std::size_t chunk_count(std::size_t count, std::size_t chunk_size) {
  return chunk_size == 0 ? 0 : (count + chunk_size - 1) / chunk_size;
}

/// Calls fn(chunk, begin, end) for every chunk of [0, count). The partition
/// depends only on `chunk_size`, never on the thread count, so callers that
/// reduce per-chunk results in chunk order get identical answers on any
/// machine.
template <typename Fn>
void parallel_chunks(std::size_t count, std::size_t chunk_size, Fn&& fn) {
  const std::size_t chunks = chunk_count(count, chunk_size);
  if (chunks == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(chunks, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      try {
        fn(c, c * chunk_size, std::min(count, (c + 1) * chunk_size));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace wmkit
