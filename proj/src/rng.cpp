#include "kolmo/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kolmo::rng {

namespace {

constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;
constexpr int kRounds = 10;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t stream_id(StreamKind kind, std::uint64_t a, std::uint64_t b) {
  constexpr std::uint64_t kIndexCap = 1ull << 28;
  if (a >= kIndexCap || b >= kIndexCap) {
    throw std::invalid_argument("rng: stream index exceeds 28-bit capacity");
  }
  return (static_cast<std::uint64_t>(kind) << 56) | (a << 28) | b;
}

Philox::Philox(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  const std::uint64_t key = splitmix64(s);
  key_[0] = static_cast<std::uint32_t>(key);
  key_[1] = static_cast<std::uint32_t>(key >> 32);
  stream_[0] = static_cast<std::uint32_t>(stream);
  stream_[1] = static_cast<std::uint32_t>(stream >> 32);
}

Block4 Philox::block(std::uint64_t index) const {
  std::uint32_t c0 = static_cast<std::uint32_t>(index);
  std::uint32_t c1 = static_cast<std::uint32_t>(index >> 32);
  std::uint32_t c2 = stream_[0];
  std::uint32_t c3 = stream_[1];
  std::uint32_t k0 = key_[0];
  std::uint32_t k1 = key_[1];
  for (int round = 0; round < kRounds; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM4x32A, c0, hi0, lo0);
    mulhilo(kPhiloxM4x32B, c2, hi1, lo1);
    const std::uint32_t n0 = hi1 ^ c1 ^ k0;
    const std::uint32_t n1 = lo1;
    const std::uint32_t n2 = hi0 ^ c3 ^ k1;
    const std::uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kPhiloxW32A;
    k1 += kPhiloxW32B;
  }
  return Block4{{c0, c1, c2, c3}};
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(seed, stream) {}

NormalStream::NormalStream(std::uint64_t seed, StreamKind kind, std::uint64_t a,
                           std::uint64_t b)
    : engine_(seed, stream_id(kind, a, b)) {}

double NormalStream::normal(std::uint64_t draw_index) const {
  const Block4 blk = engine_.block(draw_index >> 1);
  const std::uint64_t bits0 =
      (static_cast<std::uint64_t>(blk.w[1]) << 32) | blk.w[0];
  const std::uint64_t bits1 =
      (static_cast<std::uint64_t>(blk.w[3]) << 32) | blk.w[2];
  // u1 in (0,1] keeps the log finite; u2 in [0,1).
  const double u1 = static_cast<double>((bits0 >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(bits1 >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return (draw_index & 1) ? r * std::sin(theta) : r * std::cos(theta);
}

double NormalStream::uniform(std::uint64_t draw_index) const {
  // Top half of the counter range; never touched by the normal lane.
  const Block4 blk = engine_.block(draw_index | (1ull << 63));
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(blk.w[1]) << 32) | blk.w[0];
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace kolmo::rng
