#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace kolmo::parallel {

// Replicates are grouped into fixed-size blocks; a block is always processed
// start to finish by one thread, and per-block results land in a slot indexed
// by block number. Combining the slots in block order afterwards makes every
// aggregate a pure function of (seed, replicate count), not of the worker
// count or of scheduling order.

constexpr std::int64_t kReplicateBlock = 4096;

struct BlockRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

std::int64_t block_count(std::int64_t n, std::int64_t block = kReplicateBlock);
BlockRange block_range(std::int64_t block_index, std::int64_t n,
                       std::int64_t block = kReplicateBlock);

// Runs fn(block_index) for every block on `workers` threads. fn must only
// write to its own block's slot.
void for_each_block(std::int64_t n_blocks, int workers,
                    const std::function<void(std::int64_t)>& fn);

// Pairwise tree over [lo, hi). The combination order depends only on the
// number of blocks, which keeps float sums reproducible.
template <typename T, typename Combine>
T pairwise_combine(const std::vector<T>& parts, std::int64_t lo,
                   std::int64_t hi, Combine&& comb) {
  if (hi - lo == 1) return parts[lo];
  const std::int64_t mid = lo + (hi - lo) / 2;
  return comb(pairwise_combine(parts, lo, mid, comb),
              pairwise_combine(parts, mid, hi, comb));
}

template <typename T, typename Combine>
T pairwise_combine(const std::vector<T>& parts, Combine&& comb) {
  return pairwise_combine(parts, 0, static_cast<std::int64_t>(parts.size()),
                          comb);
}

}  // namespace kolmo::parallel
