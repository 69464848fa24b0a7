#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ampdet {

inline std::size_t block_count(std::size_t n, std::size_t block_size) {
  return (n + block_size - 1) / block_size;
}

/// Runs fn(block_index, begin, end) over fixed-size blocks of [0, n).
/// Block boundaries depend only on block_size, never on n_threads, so callers
/// can combine per-block partial results in index order and get the same
/// floating-point answer for any thread count.
template <typename Fn>
void parallel_blocks(std::size_t n, std::size_t block_size, int n_threads, Fn&& fn) {
  if (n == 0) return;
  const std::size_t blocks = block_count(n, block_size);
  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(n, begin + block_size);
    fn(b, begin, end);
  };
  if (n_threads <= 1 || blocks == 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(n_threads), blocks);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t b = next.fetch_add(1);
        if (b >= blocks) break;
        try {
          run_block(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          break;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ampdet
