#include <cmath>
#include <set>

#include "doctest.h"
#include "kolmo/rng.hpp"

using namespace kolmo;

TEST_CASE("splitmix64 reference sequence") {
  // First outputs from state 0; pinned so key derivation never drifts
  // between builds.
  std::uint64_t state = 0;
  CHECK(rng::splitmix64(state) == 0xE220A8397B1DCDAFull);
  CHECK(rng::splitmix64(state) == 0x6E789E6AA1B965F4ull);
  CHECK(rng::splitmix64(state) == 0x06C45D188009454Full);
}

TEST_CASE("stream ids separate kind and payload") {
  const auto a = rng::stream_id(rng::StreamKind::BrownianIncrement, 1, 2);
  const auto b = rng::stream_id(rng::StreamKind::ExactPair, 1, 2);
  const auto c = rng::stream_id(rng::StreamKind::BrownianIncrement, 2, 1);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(b != c);
  // 28-bit payload caps: distinct values below the cap stay distinct.
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 100; ++i) {
    ids.insert(rng::stream_id(rng::StreamKind::Probe, i, 77));
    ids.insert(rng::stream_id(rng::StreamKind::Probe, 77, i));
  }
  CHECK(ids.size() == 199);  // (77,77) counted once
}

TEST_CASE("philox blocks are pure functions of (seed, stream, index)") {
  rng::Philox a(42, 7);
  rng::Philox b(42, 7);
  for (std::uint64_t i : {0ull, 1ull, 1000ull, (1ull << 40)}) {
    const auto x = a.block(i);
    const auto y = b.block(i);
    for (int k = 0; k < 4; ++k) CHECK(x.w[k] == y.w[k]);
  }
  const auto x = a.block(3);
  const auto z = rng::Philox(42, 8).block(3);
  bool all_equal = true;
  for (int k = 0; k < 4; ++k) all_equal = all_equal && (x.w[k] == z.w[k]);
  CHECK_FALSE(all_equal);
}

TEST_CASE("normal stream random access matches the cursor") {
  rng::NormalStream s(5, rng::StreamKind::ExactPair, 3, 9);
  rng::NormalStream cursor(5, rng::StreamKind::ExactPair, 3, 9);
  for (std::uint64_t i = 0; i < 64; ++i) {
    CHECK(s.normal(i) == cursor.next());
  }
}

TEST_CASE("normal stream moments") {
  rng::NormalStream s(2026, rng::StreamKind::Scratch, 0, 0);
  const int n = 200000;
  double sum = 0, sum_sq = 0, sum_cube = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal(static_cast<std::uint64_t>(i));
    sum += x;
    sum_sq += x * x;
    sum_cube += x * x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  // 5 sigma tolerances at this sample size.
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sum_cube / n) < 5.0 * std::sqrt(15.0 / n));
}

TEST_CASE("uniform lane is uniform and distinct from the normal lane") {
  rng::NormalStream s(99, rng::StreamKind::Probe, 1, 1);
  const int n = 100000;
  double sum = 0;
  double min_v = 1, max_v = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform(static_cast<std::uint64_t>(i));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    min_v = std::min(min_v, u);
    max_v = std::max(max_v, u);
  }
  CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
  CHECK(min_v < 0.01);
  CHECK(max_v > 0.99);
  // The lanes must not alias: uniform(i) is not a deterministic image of
  // normal(i) block reuse.
  CHECK(s.uniform(0) != s.uniform(1));
}

TEST_CASE("golden draws pin the generator output") {
  // Frozen from the first verified build. Any change here silently
  // invalidates every stored result, so treat a mismatch as an error in the
  // generator, not in the test.
  rng::NormalStream s(20260822, rng::StreamKind::BrownianIncrement, 0, 0);
  CHECK(s.normal(0) == doctest::Approx(0.37144005652532097).epsilon(1e-15));
  CHECK(s.normal(1) == doctest::Approx(-0.16364120551344752).epsilon(1e-15));
  CHECK(s.uniform(0) == doctest::Approx(0.43513713682253119).epsilon(1e-15));
}
