#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ramify {

/// Worker count from RAMIFY_THREADS (0 or unset = hardware concurrency).
inline std::size_t thread_count() {
  std::size_t n = 0;
  if (const char* env = std::getenv("RAMIFY_THREADS")) {
    try {
      n = static_cast<std::size_t>(std::stoul(env));
    } catch (...) {
      n = 0;
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs body(block, begin, end) over fixed-size blocks of [0, n).
///
/// Block boundaries depend only on n and block_size, never on the thread
/// count, so callers that reduce per-block partial results in block order get
/// bit-identical sums for any RAMIFY_THREADS.
template <class Body>
void for_each_block(std::size_t n, std::size_t block_size, Body&& body) {
  const std::size_t blocks = (n + block_size - 1) / block_size;
  const std::size_t workers = std::min(thread_count(), blocks);
  auto run = [&](std::size_t b) { body(b, b * block_size, std::min(n, (b + 1) * block_size)); };
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) {
        try {
          run(b);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ramify
