#include "kolmo/kolmo_gauss.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kolmo/rng.hpp"

namespace kolmo::gauss {

namespace {

void check_time(double t) {
  if (!(t > 0) || !std::isfinite(t)) {
    throw std::invalid_argument("time parameter must be positive finite");
  }
}

void check_state(const State& s) {
  if (s.p.size() != s.xi.size()) {
    throw std::invalid_argument("state blocks must have equal length");
  }
}

void check_shift(const Shift& s) {
  if (s.h.size() != s.k.size()) {
    throw std::invalid_argument("shift blocks must have equal length");
  }
}

}  // namespace

State zero_state(int d) {
  if (d <= 0) throw std::invalid_argument("state dimension must be positive");
  State s;
  s.p.assign(static_cast<std::size_t>(d), 0.0);
  s.xi.assign(static_cast<std::size_t>(d), 0.0);
  return s;
}

CovarianceBlock covariance(double s, double t) {
  if (!(s > 0) || !(t > 0)) {
    throw std::invalid_argument("covariance: times must be positive");
  }
  CovarianceBlock c;
  const double a = std::min(s, t);
  const double b = std::max(s, t);
  c.bb = a;
  // E[B_s int_0^t B_v dv] = int_0^t min(s, v) dv.
  c.b_int = (t <= s) ? 0.5 * t * t : s * t - 0.5 * s * s;
  c.int_b = (s <= t) ? 0.5 * s * s : t * s - 0.5 * t * t;
  c.int_int = 0.5 * a * a * b - a * a * a / 6.0;
  return c;
}

EqualTimeCovariance covariance(double t) {
  check_time(t);
  EqualTimeCovariance c;
  c.var_b = t;
  c.cov = 0.5 * t * t;
  c.var_int = t * t * t / 3.0;
  c.det = c.var_b * c.var_int - c.cov * c.cov;  // = t^4 / 12
  return c;
}

double heat_kernel_log_density(double t, const State& start, const State& end) {
  check_time(t);
  check_state(start);
  check_state(end);
  if (start.dim() != end.dim()) {
    throw std::invalid_argument("heat_kernel: dimension mismatch");
  }
  const int d = start.dim();
  if (d == 0) throw std::invalid_argument("heat_kernel: empty state");
  const double log_norm =
      0.5 * std::log(3.0) - std::log(std::numbers::pi) - 2.0 * std::log(t);
  double acc = 0;
  for (int i = 0; i < d; ++i) {
    const double dp = end.p[static_cast<std::size_t>(i)] -
                      start.p[static_cast<std::size_t>(i)];
    const double dxi = end.xi[static_cast<std::size_t>(i)] -
                       (start.xi[static_cast<std::size_t>(i)] +
                        t * start.p[static_cast<std::size_t>(i)]);
    acc += log_norm - 2.0 * dp * dp / t + 6.0 * dp * dxi / (t * t) -
           6.0 * dxi * dxi / (t * t * t);
  }
  return acc;
}

double heat_kernel_density(double t, const State& start, const State& end) {
  return std::exp(heat_kernel_log_density(t, start, end));
}

State sample_exact(double t, const State& start, std::uint64_t seed,
                   std::uint64_t replicate) {
  check_time(t);
  check_state(start);
  const int d = start.dim();
  if (d == 0) throw std::invalid_argument("sample_exact: empty state");
  State out;
  out.p.resize(static_cast<std::size_t>(d));
  out.xi.resize(static_cast<std::size_t>(d));
  const double sqrt_t = std::sqrt(t);
  const double t32 = t * sqrt_t;
  for (int i = 0; i < d; ++i) {
    rng::NormalStream stream(seed, rng::StreamKind::ExactPair,
                             static_cast<std::uint64_t>(i), replicate);
    const double z1 = stream.normal(0);
    const double z2 = stream.normal(1);
    const double b = sqrt_t * z1;
    const double integral = t32 * (0.5 * z1 + z2 / (2.0 * std::sqrt(3.0)));
    out.p[static_cast<std::size_t>(i)] =
        start.p[static_cast<std::size_t>(i)] + b;
    out.xi[static_cast<std::size_t>(i)] =
        start.xi[static_cast<std::size_t>(i)] +
        t * start.p[static_cast<std::size_t>(i)] + integral;
  }
  return out;
}

double rn_log_derivative_exact(double t, const Shift& shift,
                               const State& point) {
  check_time(t);
  check_shift(shift);
  check_state(point);
  if (shift.dim() != point.dim()) {
    throw std::invalid_argument("rn_derivative: dimension mismatch");
  }
  State origin = zero_state(point.dim());
  State shifted_start;
  shifted_start.p = shift.h;
  shifted_start.xi = shift.k;
  return heat_kernel_log_density(t, shifted_start, point) -
         heat_kernel_log_density(t, origin, point);
}

double rn_derivative_exact(double t, const Shift& shift, const State& point) {
  return std::exp(rn_log_derivative_exact(t, shift, point));
}

double shift_quadratic_form(double t, const Shift& shift) {
  check_time(t);
  check_shift(shift);
  const EqualTimeCovariance c = covariance(t);
  double acc = 0;
  for (int i = 0; i < shift.dim(); ++i) {
    const double m0 = shift.h[static_cast<std::size_t>(i)];
    const double m1 = shift.k[static_cast<std::size_t>(i)] + t * m0;
    // Solve Sigma x = m by Cramer's rule on the 2x2 block.
    const double x0 = (m0 * c.var_int - m1 * c.cov) / c.det;
    const double x1 = (c.var_b * m1 - c.cov * m0) / c.det;
    acc += m0 * x0 + m1 * x1;
  }
  return acc;
}

double rn_log_moment(double t, const Shift& shift, double q) {
  if (!(q > 0)) throw std::invalid_argument("rn_log_moment: q must be positive");
  return 0.5 * (q * q - q) * shift_quadratic_form(t, shift);
}

double lq_log_norm_exact(double t, const Shift& shift, double q) {
  check_time(t);
  check_shift(shift);
  if (!(q > 1)) throw std::invalid_argument("lq_norm: q must exceed 1");
  double h2 = 0, hk = 0, k2 = 0;
  for (int i = 0; i < shift.dim(); ++i) {
    const double h = shift.h[static_cast<std::size_t>(i)];
    const double k = shift.k[static_cast<std::size_t>(i)];
    h2 += h * h;
    hk += h * k;
    k2 += k * k;
  }
  return 2.0 * (q - 1.0) *
         (h2 / t + 3.0 * hk / (t * t) + 3.0 * k2 / (t * t * t));
}

double lq_log_norm_quadratic(double t, const Shift& shift, double q) {
  if (!(q > 1)) throw std::invalid_argument("lq_norm: q must exceed 1");
  return 0.5 * (q - 1.0) * shift_quadratic_form(t, shift);
}

}  // namespace kolmo::gauss
