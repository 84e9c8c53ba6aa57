#include "kolmo/parallel.hpp"

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace kolmo::parallel {

std::int64_t block_count(std::int64_t n, std::int64_t block) {
  if (n < 0 || block <= 0) {
    throw std::invalid_argument("parallel: bad block geometry");
  }
  return (n + block - 1) / block;
}

BlockRange block_range(std::int64_t block_index, std::int64_t n,
                       std::int64_t block) {
  BlockRange r;
  r.begin = block_index * block;
  r.end = std::min(n, r.begin + block);
  return r;
}

void for_each_block(std::int64_t n_blocks, int workers,
                    const std::function<void(std::int64_t)>& fn) {
  if (n_blocks <= 0) return;
  workers = std::max(1, workers);
  if (workers == 1 || n_blocks == 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  const int n_threads = static_cast<int>(
      std::min<std::int64_t>(workers, n_blocks));
  pool.reserve(static_cast<std::size_t>(n_threads));
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t b = next.fetch_add(1);
        if (b >= n_blocks) return;
        try {
          fn(b);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!failed.exchange(true)) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(first_error);
}

}  // namespace kolmo::parallel
