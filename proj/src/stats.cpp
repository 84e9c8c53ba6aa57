#include "kolmo/stats.hpp"

#include <limits>
#include <stdexcept>

namespace kolmo::stats {

double Moments::variance() const {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double m = sum / nn;
  // Guard against cancellation producing a tiny negative value.
  const double v = (sum_sq - nn * m * m) / (nn - 1.0);
  return v > 0.0 ? v : 0.0;
}

double Moments::std_error() const {
  if (n < 2) return std::numeric_limits<double>::infinity();
  return std::sqrt(variance() / static_cast<double>(n));
}

Moments merge(const Moments& a, const Moments& b) {
  Moments out;
  out.n = a.n + b.n;
  out.sum = a.sum + b.sum;
  out.sum_sq = a.sum_sq + b.sum_sq;
  return out;
}

double Moments2::var_x() const {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double v = (sum_xx - sum_x * sum_x / nn) / (nn - 1.0);
  return v > 0.0 ? v : 0.0;
}

double Moments2::var_y() const {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double v = (sum_yy - sum_y * sum_y / nn) / (nn - 1.0);
  return v > 0.0 ? v : 0.0;
}

double Moments2::cov_xy() const {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  return (sum_xy - sum_x * sum_y / nn) / (nn - 1.0);
}

Moments2 merge(const Moments2& a, const Moments2& b) {
  Moments2 out;
  out.n = a.n + b.n;
  out.sum_x = a.sum_x + b.sum_x;
  out.sum_y = a.sum_y + b.sum_y;
  out.sum_xx = a.sum_xx + b.sum_xx;
  out.sum_yy = a.sum_yy + b.sum_yy;
  out.sum_xy = a.sum_xy + b.sum_xy;
  return out;
}

void LogSum::add_log(double log_x) {
  n += 1;
  if (std::isinf(log_x) && log_x < 0) return;  // exp = 0 contributes nothing
  if (log_x <= max_log) {
    sum_scaled += std::exp(log_x - max_log);
    return;
  }
  // Rescale the running sum to the new maximum.
  if (std::isfinite(max_log)) {
    sum_scaled = sum_scaled * std::exp(max_log - log_x);
  }
  sum_scaled += 1.0;
  max_log = log_x;
}

double LogSum::log_mean() const {
  if (n == 0) throw std::logic_error("LogSum: empty");
  if (!std::isfinite(max_log)) return -std::numeric_limits<double>::infinity();
  return max_log + std::log(sum_scaled) - std::log(static_cast<double>(n));
}

LogSum merge(const LogSum& a, const LogSum& b) {
  LogSum out;
  out.n = a.n + b.n;
  if (!std::isfinite(a.max_log)) {
    out.max_log = b.max_log;
    out.sum_scaled = b.sum_scaled;
    return out;
  }
  if (!std::isfinite(b.max_log)) {
    out.max_log = a.max_log;
    out.sum_scaled = a.sum_scaled;
    return out;
  }
  if (a.max_log >= b.max_log) {
    out.max_log = a.max_log;
    out.sum_scaled = a.sum_scaled + b.sum_scaled * std::exp(b.max_log - a.max_log);
  } else {
    out.max_log = b.max_log;
    out.sum_scaled = b.sum_scaled + a.sum_scaled * std::exp(a.max_log - b.max_log);
  }
  return out;
}

double log_add(double a, double b) {
  if (!std::isfinite(a) && a < 0) return b;
  if (!std::isfinite(b) && b < 0) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sub(double a, double b) {
  if (!std::isfinite(b) && b < 0) return a;
  if (b > a) throw std::invalid_argument("log_sub: negative difference");
  if (b == a) return -std::numeric_limits<double>::infinity();
  return a + std::log1p(-std::exp(b - a));
}

}  // namespace kolmo::stats
