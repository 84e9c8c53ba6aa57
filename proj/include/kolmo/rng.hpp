#pragma once

#include <cstdint>
#include <string>

namespace kolmo::rng {

// Counter-based generator (Philox4x32, 10 rounds). Every consumer owns a
// logical stream addressed by (master seed, stream id); the 128-bit counter is
// split as [block index | stream id], so streams never overlap no matter how
// many blocks each one consumes and no matter which thread asks first. All
// draws are stateless functions of (seed, stream, position), which is what
// makes results independent of the worker count.

struct Block4 {
  std::uint32_t w[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

// Stream id layout: 8 bits of kind, 28 bits of `a`, 28 bits of `b`.
// `a` is usually a coordinate index, `b` a replicate index.
enum class StreamKind : std::uint32_t {
  BrownianIncrement = 1,
  ExactPair = 2,
  Probe = 3,
  Scratch = 4,
};

std::uint64_t stream_id(StreamKind kind, std::uint64_t a, std::uint64_t b);

class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  // Block `index` of this stream. Pure function of the constructor arguments.
  Block4 block(std::uint64_t index) const;

 private:
  std::uint32_t key_[2];
  std::uint32_t stream_[2];
};

// N(0,1) draws from one Philox stream, two per counter block via Box-Muller.
// `normal(i)` is random access; `next()` is a cursor over the same sequence.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);
  NormalStream(std::uint64_t seed, StreamKind kind, std::uint64_t a, std::uint64_t b);

  double normal(std::uint64_t draw_index) const;
  double next() { return normal(cursor_++); }

  // Uniform on [0,1), one per counter block, independent of the normal lane.
  double uniform(std::uint64_t draw_index) const;

 private:
  Philox engine_;
  std::uint64_t cursor_ = 0;
};

}  // namespace kolmo::rng
