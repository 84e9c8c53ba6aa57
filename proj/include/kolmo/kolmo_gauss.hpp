#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kolmo::gauss {

// State of the position/integral pair: p and xi have the same length d, one
// entry per independent coordinate.
struct State {
  std::vector<double> p;
  std::vector<double> xi;

  int dim() const { return static_cast<int>(p.size()); }
};

State zero_state(int d);

// Shift by a Cameron-Martin direction: h acts on the position block, k on the
// integral block. Same length d.
struct Shift {
  std::vector<double> h;
  std::vector<double> k;

  int dim() const { return static_cast<int>(h.size()); }
};

// Two-time second moments of one coordinate pair (B, I), I_t = int_0^t B.
//   E[B_s B_t] = min(s,t)
//   E[B_s I_t] = t^2/2 for t <= s, s t - s^2/2 otherwise
//   E[I_s I_t] = a^2 b / 2 - a^3 / 6,  a = min(s,t), b = max(s,t)
struct CovarianceBlock {
  double bb;        // E[B_s B_t]
  double b_int;     // E[B_s I_t]
  double int_b;     // E[I_s B_t]
  double int_int;   // E[I_s I_t]
};

CovarianceBlock covariance(double s, double t);

// Equal-time covariance matrix [[t, t^2/2], [t^2/2, t^3/3]], det t^4/12.
struct EqualTimeCovariance {
  double var_b;
  double cov;
  double var_int;
  double det;
};

EqualTimeCovariance covariance(double t);

// Transition density of the pair started at `start`, evaluated at `end`,
// product over coordinates. Each coordinate factor is the two-dimensional
// Gaussian with mean (p0, xi0 + t p0) and the equal-time covariance above; in
// closed form
//   (sqrt(3)/(pi t^2)) exp(-2 dp^2/t + 6 dp dxi/t^2 - 6 dxi^2/t^3),
// dp = p - p0, dxi = xi - (xi0 + t p0).
double heat_kernel_log_density(double t, const State& start, const State& end);
double heat_kernel_density(double t, const State& start, const State& end);

// Exact draw of the time-t state. Per coordinate, the Cholesky factor of the
// equal-time covariance gives B = sqrt(t) z1, I = t^{3/2} (z1/2 + z2/(2 sqrt 3)).
State sample_exact(double t, const State& start, std::uint64_t seed,
                   std::uint64_t replicate = 0);

// Density ratio of the (h,k)-shifted law against the unshifted law at `point`
// (both started at the origin). The shifted mean is (h, k + t h).
double rn_log_derivative_exact(double t, const Shift& shift, const State& point);
double rn_derivative_exact(double t, const Shift& shift, const State& point);

// Quadratic form G = m^T Sigma_t^{-1} m summed over coordinates, with
// m = (h, k + t h). Evaluated by a 2x2 solve against the covariance entries,
// not by a pre-inverted formula, so it can serve as an independent route.
double shift_quadratic_form(double t, const Shift& shift);

// log E[RN^q] under the unshifted law: (q^2 - q)/2 * G.
double rn_log_moment(double t, const Shift& shift, double q);

// log of the L^q norm  E[RN^q]^{1/q}  via the direct display
//   2 (q-1) ( |h|^2/t + 3 <h,k>/t^2 + 3 |k|^2/t^3 ).
double lq_log_norm_exact(double t, const Shift& shift, double q);

// Same quantity through the quadratic form: (q-1)/2 * G. Independent route;
// the two must agree to about 1e-12 in log scale.
double lq_log_norm_quadratic(double t, const Shift& shift, double q);

}  // namespace kolmo::gauss
