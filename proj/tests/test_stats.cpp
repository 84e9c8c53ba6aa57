#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "kolmo/parallel.hpp"
#include "kolmo/stats.hpp"

using namespace kolmo;

TEST_CASE("moments of a small sample") {
  stats::Moments m;
  for (double x : {1.0, 2.0, 3.0, 4.0}) m.add(x);
  CHECK(m.n == 4);
  CHECK(m.mean() == doctest::Approx(2.5));
  CHECK(m.variance() == doctest::Approx(5.0 / 3.0));
  CHECK(m.std_error() == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.ci_half_99() == doctest::Approx(stats::kZ99 * m.std_error()));
}

TEST_CASE("moment merge equals a single pass") {
  stats::Moments a, b, whole;
  const std::vector<double> xs = {0.1, -2.0, 3.7, 0.0, 5.5, -1.1};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    (i < 3 ? a : b).add(xs[i]);
    whole.add(xs[i]);
  }
  const auto merged = stats::merge(a, b);
  CHECK(merged.n == whole.n);
  CHECK(merged.sum == whole.sum);
  CHECK(merged.sum_sq == whole.sum_sq);
}

TEST_CASE("pair moments recover the sample covariance") {
  stats::Moments2 m;
  m.add(1, 2);
  m.add(2, 4);
  m.add(3, 6);
  CHECK(m.mean_x() == doctest::Approx(2.0));
  CHECK(m.mean_y() == doctest::Approx(4.0));
  CHECK(m.var_x() == doctest::Approx(1.0));
  CHECK(m.var_y() == doctest::Approx(4.0));
  CHECK(m.cov_xy() == doctest::Approx(2.0));

  stats::Moments2 p, q;
  p.add(1, 2);
  q.add(2, 4);
  q.add(3, 6);
  const auto merged = stats::merge(p, q);
  CHECK(merged.cov_xy() == doctest::Approx(2.0));
}

TEST_CASE("log-sum mean") {
  stats::LogSum s;
  s.add_log(std::log(1.0));
  s.add_log(std::log(2.0));
  s.add_log(std::log(3.0));
  CHECK(s.log_mean() == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // Values far beyond double range stay exact in log scale.
  stats::LogSum big;
  big.add_log(1000.0);
  big.add_log(1000.0 + std::log(3.0));
  CHECK(big.log_mean() == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("log-sum merge matches direct accumulation") {
  stats::LogSum direct;
  std::vector<stats::LogSum> parts(4);
  for (int i = 0; i < 40; ++i) {
    const double lx = 0.37 * i - 3.0;
    direct.add_log(lx);
    parts[static_cast<std::size_t>(i % 4)].add_log(lx);
  }
  const auto merged = parallel::pairwise_combine(
      parts, [](const stats::LogSum& a, const stats::LogSum& b) {
        return stats::merge(a, b);
      });
  CHECK(merged.n == direct.n);
  CHECK(merged.log_mean() == doctest::Approx(direct.log_mean()).epsilon(1e-13));
}

TEST_CASE("log_add and log_sub") {
  CHECK(stats::log_add(std::log(2.0), std::log(3.0)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));
  CHECK(stats::log_sub(std::log(5.0), std::log(3.0)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(std::isinf(stats::log_sub(1.25, 1.25)));
  CHECK(stats::log_sub(1.25, 1.25) < 0);
  CHECK_THROWS_AS((void)stats::log_sub(0.0, 1.0), std::invalid_argument);
}

TEST_CASE("block ranges tile the replicate range") {
  const std::int64_t n = 3 * parallel::kReplicateBlock + 17;
  const std::int64_t blocks = parallel::block_count(n);
  CHECK(blocks == 4);
  std::int64_t covered = 0;
  for (std::int64_t b = 0; b < blocks; ++b) {
    const auto r = parallel::block_range(b, n);
    CHECK(r.begin == b * parallel::kReplicateBlock);
    CHECK(r.end <= n);
    covered += r.end - r.begin;
  }
  CHECK(covered == n);
}

TEST_CASE("for_each_block runs every block once for any worker count") {
  const std::int64_t blocks = 37;
  for (int workers : {1, 3, 8}) {
    std::vector<int> hits(static_cast<std::size_t>(blocks), 0);
    parallel::for_each_block(blocks, workers, [&](std::int64_t b) {
      hits[static_cast<std::size_t>(b)] += 1;
    });
    for (int h : hits) CHECK(h == 1);
  }
}
