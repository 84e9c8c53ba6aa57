#include <cmath>
#include <numbers>
#include <stdexcept>

#include "doctest.h"
#include "kolmo/kolmo_gauss.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/stats.hpp"

using namespace kolmo;

TEST_CASE("two-time covariance against the integral oracle") {
  // E[B_s I_t] = int_0^t min(s,u) du and E[I_s I_t] = int_0^s int_0^t min du;
  // quadrature of min reproduces the closed forms.
  for (auto [s, t] : {std::pair{0.5, 1.5}, {1.5, 0.5}, {0.7, 0.7}, {2.0, 3.0}}) {
    const auto c = gauss::covariance(s, t);
    CHECK(c.bb == doctest::Approx(std::min(s, t)).epsilon(1e-14));
    const auto b_int = quad::integrate(
        [s](double u) { return std::min(s, u); }, 0, t, 1e-12);
    CHECK(c.b_int == doctest::Approx(b_int.value).epsilon(1e-11));
    const auto int_b = quad::integrate(
        [t](double u) { return std::min(t, u); }, 0, s, 1e-12);
    CHECK(c.int_b == doctest::Approx(int_b.value).epsilon(1e-11));
    // The integrand kinks along the diagonal, so the iterated quadrature
    // carries a little more residual than the smooth cases above.
    const auto int_int = quad::integrate2(
        [](double u, double v) { return std::min(u, v); }, 0, s, 0, t, 1e-12);
    CHECK(c.int_int == doctest::Approx(int_int.value).epsilon(1e-8));
  }
}

TEST_CASE("equal-time covariance block") {
  const auto c = gauss::covariance(2.0);
  CHECK(c.var_b == doctest::Approx(2.0));
  CHECK(c.cov == doctest::Approx(2.0));
  CHECK(c.var_int == doctest::Approx(8.0 / 3.0));
  CHECK(c.det == doctest::Approx(16.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("kernel value at the origin") {
  const auto x = gauss::zero_state(1);
  CHECK(gauss::heat_kernel_density(1.0, x, x) ==
        doctest::Approx(std::sqrt(3.0) / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("kernel closed form equals the assembled bivariate normal") {
  // Independent route: mean vector and covariance inverse assembled on the
  // spot from the block entries.
  rng::NormalStream draws(77, rng::StreamKind::Scratch, 1, 0);
  std::uint64_t i = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    const double t = 0.2 + 2.5 * draws.uniform(i++);
    gauss::State start, end;
    start.p = {2.0 * draws.normal(i++)};
    start.xi = {2.0 * draws.normal(i++)};
    end.p = {start.p[0] + 2.0 * draws.normal(i++)};
    end.xi = {start.xi[0] + 2.0 * draws.normal(i++)};
    const auto c = gauss::covariance(t);
    const double dp = end.p[0] - start.p[0];
    const double dxi = end.xi[0] - (start.xi[0] + t * start.p[0]);
    const double quad_form =
        (c.var_int * dp * dp - 2.0 * c.cov * dp * dxi + c.var_b * dxi * dxi) /
        c.det;
    const double log_ref = -std::log(2.0 * std::numbers::pi) -
                           0.5 * std::log(c.det) - 0.5 * quad_form;
    const double log_val = gauss::heat_kernel_log_density(t, start, end);
    CHECK(log_val == doctest::Approx(log_ref).epsilon(1e-12));
  }
}

TEST_CASE("kernel integrates to one") {
  const auto start = gauss::zero_state(1);
  const auto mass = quad::integrate2(
      [&](double p, double xi) {
        gauss::State end;
        end.p = {p};
        end.xi = {xi};
        return gauss::heat_kernel_density(1.0, start, end);
      },
      -8, 8, -5, 5, 1e-9);
  CHECK(mass.value == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("multi-coordinate kernel factorizes") {
  gauss::State start, end;
  start.p = {0.1, -0.4};
  start.xi = {0.0, 0.3};
  end.p = {0.5, 0.2};
  end.xi = {-0.1, 0.6};
  double log_prod = 0;
  for (int i = 0; i < 2; ++i) {
    gauss::State s1, e1;
    s1.p = {start.p[i]};
    s1.xi = {start.xi[i]};
    e1.p = {end.p[i]};
    e1.xi = {end.xi[i]};
    log_prod += gauss::heat_kernel_log_density(0.7, s1, e1);
  }
  CHECK(gauss::heat_kernel_log_density(0.7, start, end) ==
        doctest::Approx(log_prod).epsilon(1e-13));
}

TEST_CASE("exact sampling moments") {
  gauss::State start;
  start.p = {0.3};
  start.xi = {-0.2};
  const double t = 1.0;
  const int n = 200000;
  stats::Moments2 m;
  for (int r = 0; r < n; ++r) {
    const auto s = gauss::sample_exact(t, start, 5, r);
    m.add(s.p[0], s.xi[0]);
  }
  // Mean (p0, xi0 + t p0) = (0.3, 0.1); covariance [[1, 1/2], [1/2, 1/3]].
  CHECK(std::abs(m.mean_x() - 0.3) < 5.0 / std::sqrt(1.0 * n));
  CHECK(std::abs(m.mean_y() - 0.1) <
        5.0 * std::sqrt(1.0 / 3.0 / n));
  CHECK(std::abs(m.var_x() - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m.var_y() - 1.0 / 3.0) < 5.0 * (1.0 / 3.0) * std::sqrt(2.0 / n));
  const double se_cov = std::sqrt((1.0 / 3.0 + 0.25) / n);
  CHECK(std::abs(m.cov_xy() - 0.5) < 5.0 * se_cov);
}

TEST_CASE("sampling is replicate-addressed") {
  const auto start = gauss::zero_state(2);
  const auto a = gauss::sample_exact(1.0, start, 9, 4);
  const auto b = gauss::sample_exact(1.0, start, 9, 4);
  const auto c = gauss::sample_exact(1.0, start, 9, 5);
  CHECK(a.p == b.p);
  CHECK(a.xi == b.xi);
  CHECK(a.p != c.p);
}

TEST_CASE("shift density ratio agrees with the kernel quotient") {
  // The shifted law is the kernel started at (h, k); the ratio of log
  // densities is an independent route to the density ratio.
  rng::NormalStream draws(31, rng::StreamKind::Scratch, 2, 0);
  std::uint64_t i = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const double t = 0.3 + 2.0 * draws.uniform(i++);
    gauss::Shift shift;
    shift.h = {draws.normal(i++)};
    shift.k = {draws.normal(i++)};
    gauss::State point;
    point.p = {2.0 * draws.normal(i++)};
    point.xi = {2.0 * draws.normal(i++)};
    gauss::State shifted_start;
    shifted_start.p = {shift.h[0]};
    shifted_start.xi = {shift.k[0]};
    const double via_kernels =
        gauss::heat_kernel_log_density(t, shifted_start, point) -
        gauss::heat_kernel_log_density(t, gauss::zero_state(1), point);
    CHECK(gauss::rn_log_derivative_exact(t, shift, point) ==
          doctest::Approx(via_kernels).epsilon(1e-11));
  }
}

TEST_CASE("shift quadratic form and norm displays") {
  gauss::Shift shift;
  shift.h = {0.0};
  shift.k = {1.0};
  // G = m^T Sigma^{-1} m with m = (0, 1): 12/t^3 at t = 1.
  CHECK(gauss::shift_quadratic_form(1.0, shift) ==
        doctest::Approx(12.0).epsilon(1e-12));
  CHECK(gauss::lq_log_norm_exact(1.0, shift, 2.0) ==
        doctest::Approx(6.0).epsilon(1e-12));

  gauss::Shift hshift;
  hshift.h = {1.0};
  hshift.k = {0.0};
  CHECK(gauss::lq_log_norm_exact(1.0, hshift, 2.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(gauss::rn_log_moment(1.0, shift, 2.0) ==
        doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("the two norm routes agree everywhere") {
  rng::NormalStream draws(53, rng::StreamKind::Scratch, 3, 0);
  std::uint64_t i = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const double t = 0.1 + 3.0 * draws.uniform(i++);
    const double q = 1.0 + 1e-6 + 6.0 * draws.uniform(i++);
    gauss::Shift shift;
    const int d = 1 + (rep % 3);
    for (int c = 0; c < d; ++c) {
      shift.h.push_back(2.0 * draws.normal(i++));
      shift.k.push_back(2.0 * draws.normal(i++));
    }
    const double a = gauss::lq_log_norm_exact(t, shift, q);
    const double b = gauss::lq_log_norm_quadratic(t, shift, q);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("norm requires q above one") {
  gauss::Shift shift;
  shift.h = {1.0};
  shift.k = {0.0};
  CHECK_THROWS_AS((void)gauss::lq_log_norm_exact(1.0, shift, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)gauss::lq_log_norm_exact(1.0, shift, 0.5),
                  std::invalid_argument);
}
