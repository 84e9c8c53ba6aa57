#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace kolmo::stats {

// Two-sided 99% normal quantile used for every confidence interval.
constexpr double kZ99 = 2.5758293035489004;

// Plain moment sums for one scalar. Accumulation happens inside a block in
// replicate order; blocks are merged pairwise, so the result is independent
// of the worker count.
struct Moments {
  std::int64_t n = 0;
  double sum = 0;
  double sum_sq = 0;

  void add(double x) {
    n += 1;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
  // Unbiased sample variance.
  double variance() const;
  double std_error() const;
  double ci_half_99() const { return kZ99 * std_error(); }
};

Moments merge(const Moments& a, const Moments& b);

// Joint sums for a scalar pair, enough for the sample covariance matrix.
struct Moments2 {
  std::int64_t n = 0;
  double sum_x = 0, sum_y = 0;
  double sum_xx = 0, sum_yy = 0, sum_xy = 0;

  void add(double x, double y) {
    n += 1;
    sum_x += x;
    sum_y += y;
    sum_xx += x * x;
    sum_yy += y * y;
    sum_xy += x * y;
  }
  double mean_x() const { return n > 0 ? sum_x / static_cast<double>(n) : 0.0; }
  double mean_y() const { return n > 0 ? sum_y / static_cast<double>(n) : 0.0; }
  double var_x() const;
  double var_y() const;
  double cov_xy() const;
};

Moments2 merge(const Moments2& a, const Moments2& b);

// Running log-sum-exp over samples given in log scale. Used for means of
// exp-valued quantities whose linear values overflow. Merging two partials is
// exact in log space, and the pairwise merge order keeps it reproducible.
struct LogSum {
  std::int64_t n = 0;
  double max_log = -std::numeric_limits<double>::infinity();
  double sum_scaled = 0;  // sum of exp(log_x - max_log)

  void add_log(double log_x);
  // log of the sample mean of exp(log_x).
  double log_mean() const;
};

LogSum merge(const LogSum& a, const LogSum& b);

// log(exp(a) + exp(b)) without overflow.
double log_add(double a, double b);
// log(exp(a) - exp(b)); requires a >= b. Returns -inf when equal.
double log_sub(double a, double b);

}  // namespace kolmo::stats
