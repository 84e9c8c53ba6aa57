#include "kolmo/verify.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kolmo/parallel.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/stats.hpp"
#include "kolmo/wiener.hpp"

namespace kolmo::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// One-sided 99% normal quantile, used by the trend test.
constexpr double kZ99OneSided = 2.3263478740408408;

double safe_log(double v) { return v > 0 ? std::log(v) : -kInf; }

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "HOLDS";
    case Verdict::Violated: return "VIOLATED";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "HOLDS") return Verdict::Holds;
  if (s == "VIOLATED") return Verdict::Violated;
  if (s == "INCONCLUSIVE") return Verdict::Inconclusive;
  throw std::invalid_argument("unknown verdict: " + s);
}

Estimate Estimate::from_linear(double value, double ci, long samples) {
  Estimate e;
  e.value = value;
  e.ci = ci;
  e.samples = samples;
  e.log_value = safe_log(value);
  if (value > 0 && ci < value) {
    e.ci_log = std::max(std::log1p(ci / value), -std::log1p(-ci / value));
  } else if (value > 0) {
    e.ci_log = kInf;
  } else {
    e.ci_log = (ci == 0) ? 0.0 : kInf;
  }
  return e;
}

Estimate Estimate::from_log(double log_value, double ci_log, long samples) {
  Estimate e;
  e.log_value = log_value;
  e.ci_log = ci_log;
  e.samples = samples;
  if (log_value > 709.0) {
    e.value = kInf;
    e.ci = kInf;
  } else {
    e.value = std::exp(log_value);
    e.ci = (ci_log < 700.0) ? e.value * std::expm1(ci_log) : kInf;
  }
  return e;
}

Verdict assess(double margin, double total_width, bool statistical) {
  if (std::isnan(margin)) return Verdict::Inconclusive;
  if (statistical) {
    if (margin >= total_width) return Verdict::Holds;
    if (margin < -total_width) return Verdict::Violated;
    return Verdict::Inconclusive;
  }
  return margin >= -total_width ? Verdict::Holds : Verdict::Violated;
}

InequalityReport make_report(std::string name, const Estimate& lhs,
                             const Estimate& rhs, bool statistical,
                             bool log_domain, std::uint64_t seed) {
  InequalityReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.statistical = statistical;
  r.log_domain = log_domain;
  r.seed = seed;
  const double margin = log_domain ? r.log_margin() : r.margin();
  const double width = log_domain ? lhs.ci_log + rhs.ci_log : lhs.ci + rhs.ci;
  r.verdict = assess(margin, width, statistical);
  return r;
}

namespace {

void require_nonnegative(const registry::BoundedFunction& f, int dim) {
  if (f.inf_bound < 0) {
    throw std::invalid_argument("check: " + f.name +
                                " declares a negative lower bound");
  }
  rng::NormalStream probe(20260822u, rng::StreamKind::Probe, 0, 0);
  std::vector<double> p(static_cast<std::size_t>(dim));
  std::vector<double> xi(static_cast<std::size_t>(dim));
  for (int k = 0; k < 32; ++k) {
    for (auto& v : p) v = 2.0 * probe.next();
    for (auto& v : xi) v = 2.0 * probe.next();
    if (f(p, xi) < 0) {
      throw std::invalid_argument("check: " + f.name +
                                  " takes negative probe values");
    }
  }
}

}  // namespace

Estimate semigroup_quadrature(const StateFn& f, double t, const gauss::State& x,
                              double abs_tol) {
  if (x.dim() != 1) {
    throw std::invalid_argument(
        "semigroup quadrature: one coordinate only (no closed kernel "
        "otherwise)");
  }
  if (!(t > 0)) throw std::invalid_argument("semigroup quadrature: t <= 0");
  const double mean_p = x.p[0];
  const double mean_xi = x.xi[0] + t * x.p[0];
  const double sd_p = std::sqrt(t);
  const double sd_xi = std::sqrt(t * t * t / 3.0);
  const double half = 8.5;
  auto integrand = [&](double p, double xi) {
    const double pp[1] = {p};
    const double xx[1] = {xi};
    gauss::State end;
    end.p = {p};
    end.xi = {xi};
    return f(std::span<const double>(pp, 1), std::span<const double>(xx, 1)) *
           gauss::heat_kernel_density(t, x, end);
  };
  const quad::Result res = quad::integrate2(
      integrand, mean_p - half * sd_p, mean_p + half * sd_p,
      mean_xi - half * sd_xi, mean_xi + half * sd_xi, abs_tol);
  double ci = 2.0 * res.abs_error + 1e-15 * (1.0 + std::abs(res.value));
  if (!res.converged) ci = std::max(ci, 1e-6 * (1.0 + std::abs(res.value)));
  return Estimate::from_linear(res.value, ci, 0);
}

Estimate semigroup_mc(const StateFn& f, double t, const gauss::State& x,
                      const McOptions& opt) {
  if (!(t > 0)) throw std::invalid_argument("semigroup mc: t <= 0");
  if (opt.samples <= 0) throw std::invalid_argument("semigroup mc: no samples");
  const std::int64_t blocks = parallel::block_count(opt.samples);
  std::vector<stats::Moments> parts(static_cast<std::size_t>(blocks));
  parallel::for_each_block(blocks, opt.workers, [&](std::int64_t bi) {
    const auto range = parallel::block_range(bi, opt.samples);
    stats::Moments m;
    for (std::int64_t rep = range.begin; rep < range.end; ++rep) {
      const gauss::State s = gauss::sample_exact(
          t, x, opt.seed, static_cast<std::uint64_t>(rep));
      m.add(f(s.p, s.xi));
    }
    parts[static_cast<std::size_t>(bi)] = m;
  });
  const stats::Moments total = parallel::pairwise_combine(
      parts, [](const stats::Moments& a, const stats::Moments& b) {
        return stats::merge(a, b);
      });
  return Estimate::from_linear(total.mean(), total.ci_half_99(), opt.samples);
}

ExactMomentSummary exact_pair_moments(double t, const gauss::State& start,
                                      const McOptions& opt) {
  if (!(t > 0)) throw std::invalid_argument("pair moments: t <= 0");
  const int d = start.dim();
  const std::int64_t blocks = parallel::block_count(opt.samples);
  std::vector<std::vector<stats::Moments2>> parts(
      static_cast<std::size_t>(blocks),
      std::vector<stats::Moments2>(static_cast<std::size_t>(d)));
  parallel::for_each_block(blocks, opt.workers, [&](std::int64_t bi) {
    const auto range = parallel::block_range(bi, opt.samples);
    auto& slot = parts[static_cast<std::size_t>(bi)];
    for (std::int64_t rep = range.begin; rep < range.end; ++rep) {
      const gauss::State s = gauss::sample_exact(
          t, start, opt.seed, static_cast<std::uint64_t>(rep));
      for (int i = 0; i < d; ++i) {
        slot[static_cast<std::size_t>(i)].add(s.p[static_cast<std::size_t>(i)],
                                              s.xi[static_cast<std::size_t>(i)]);
      }
    }
  });
  ExactMomentSummary out;
  out.per_coord.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    std::vector<stats::Moments2> column(static_cast<std::size_t>(blocks));
    for (std::int64_t b = 0; b < blocks; ++b) {
      column[static_cast<std::size_t>(b)] =
          parts[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
    }
    out.per_coord[static_cast<std::size_t>(i)] = parallel::pairwise_combine(
        column, [](const stats::Moments2& a, const stats::Moments2& b) {
          return stats::merge(a, b);
        });
  }
  return out;
}

EndpointEnsemble simulate_drift_ensemble(const drift::DriftSpec& spec, double t,
                                         std::span<const double> p0,
                                         int n_coords, const McOptions& opt) {
  if (!(t > 0)) throw std::invalid_argument("drift ensemble: t <= 0");
  if (opt.grid_steps < 2) {
    throw std::invalid_argument("drift ensemble: grid too coarse");
  }
  const std::vector<double> times = wiener::uniform_grid(t, opt.grid_steps);
  drift::DriftShift shift;
  shift.h.assign(p0.begin(), p0.end());
  const int r = spec.r();
  EndpointEnsemble ens;
  ens.p.assign(static_cast<std::size_t>(opt.samples),
               std::vector<double>(static_cast<std::size_t>(n_coords)));
  ens.xi.assign(static_cast<std::size_t>(opt.samples),
                std::vector<double>(static_cast<std::size_t>(r)));
  const std::int64_t blocks = parallel::block_count(opt.samples);
  parallel::for_each_block(blocks, opt.workers, [&](std::int64_t bi) {
    const auto range = parallel::block_range(bi, opt.samples);
    for (std::int64_t rep = range.begin; rep < range.end; ++rep) {
      drift::simulate_y_endpoint(spec, &shift, times, n_coords, opt.seed,
                                 static_cast<std::uint64_t>(rep),
                                 ens.p[static_cast<std::size_t>(rep)],
                                 ens.xi[static_cast<std::size_t>(rep)]);
    }
  });
  return ens;
}

Estimate ensemble_mean(const EndpointEnsemble& ens, const StateFn& f,
                       std::span<const double> xi0) {
  if (ens.p.empty()) throw std::invalid_argument("ensemble mean: empty");
  const std::size_t r = ens.xi[0].size();
  std::vector<double> xi(r);
  stats::Moments m;
  for (std::size_t rep = 0; rep < ens.p.size(); ++rep) {
    for (std::size_t j = 0; j < r; ++j) {
      const double base = (j < xi0.size()) ? xi0[j] : 0.0;
      xi[j] = base + ens.xi[rep][j];
    }
    m.add(f(ens.p[rep], xi));
  }
  return Estimate::from_linear(m.mean(), m.ci_half_99(), ens.samples());
}

InequalityReport check_wang_quadrature(const registry::BoundedFunction& f,
                                       double alpha, double t,
                                       const gauss::State& x,
                                       const gauss::State& y, double abs_tol) {
  require_nonnegative(f, x.dim());
  const registry::BoundedFunction fa = registry::power(f, alpha);
  const Estimate ex = semigroup_quadrature(f.eval, t, x, abs_tol);
  const Estimate ey = semigroup_quadrature(fa.eval, t, y, abs_tol);
  const bounds::Bound c = bounds::wang_constant_kolmogorov(alpha, t, x, y);
  const Estimate lhs =
      Estimate::from_log(alpha * ex.log_value, alpha * ex.ci_log, 0);
  const Estimate rhs = Estimate::from_log(ey.log_value + c.log_value,
                                          ey.ci_log, 0);
  return make_report("wang_quadrature:" + f.name, lhs, rhs,
                     /*statistical=*/false, /*log_domain=*/true, 0);
}

InequalityReport check_wang_mc(const registry::BoundedFunction& f, double alpha,
                               double t, const gauss::State& x,
                               const gauss::State& y, const McOptions& opt) {
  require_nonnegative(f, x.dim());
  const registry::BoundedFunction fa = registry::power(f, alpha);
  const Estimate ex = semigroup_mc(f.eval, t, x, opt);
  const Estimate ey = semigroup_mc(fa.eval, t, y, opt);
  const bounds::Bound c = bounds::wang_constant_kolmogorov(alpha, t, x, y);
  const Estimate lhs = Estimate::from_log(alpha * ex.log_value,
                                          alpha * ex.ci_log, opt.samples);
  const Estimate rhs = Estimate::from_log(ey.log_value + c.log_value,
                                          ey.ci_log, opt.samples);
  return make_report("wang_mc:" + f.name, lhs, rhs, /*statistical=*/true,
                     /*log_domain=*/true, opt.seed);
}

InequalityReport check_wang_drift(const registry::BoundedFunction& f,
                                  double alpha, double t,
                                  const bounds::DriftState& x,
                                  const bounds::DriftState& y,
                                  const drift::DriftSpec& spec,
                                  drift::AssumptionMode mode,
                                  const EndpointEnsemble& ens_x,
                                  const EndpointEnsemble& ens_y,
                                  std::uint64_t seed) {
  require_nonnegative(f, static_cast<int>(x.p.size()));
  if (ens_x.p.empty() || ens_y.p.empty()) {
    throw std::invalid_argument("check_wang_drift: empty ensemble");
  }
  if (ens_x.xi[0].size() != static_cast<std::size_t>(spec.r())) {
    throw std::invalid_argument(
        "check_wang_drift: ensemble does not match the drift spec");
  }
  const registry::BoundedFunction fa = registry::power(f, alpha);
  const Estimate ex = ensemble_mean(ens_x, f.eval, x.xi);
  const Estimate ey = ensemble_mean(ens_y, fa.eval, y.xi);
  const bounds::Bound c = bounds::wang_constant_drift(alpha, t, x, y, spec, mode);
  const Estimate lhs = Estimate::from_log(alpha * ex.log_value,
                                          alpha * ex.ci_log, ex.samples);
  const Estimate rhs = Estimate::from_log(ey.log_value + c.log_value,
                                          ey.ci_log, ey.samples);
  return make_report("wang_drift:" + f.name + ":" + spec.name, lhs, rhs,
                     /*statistical=*/true, /*log_domain=*/true, seed);
}

namespace {

struct LogDerivative {
  double value = 0;
  double budget = 0;  // truncation plus quadrature noise
};

// d/du ln P_t f along one coordinate direction of the start state, by a
// 5-point central stencil of quadrature values. The wider points only feed
// the third-derivative estimate behind the truncation budget.
LogDerivative log_gradient(const StateFn& f, double t, const gauss::State& x,
                           bool in_p, double step, double quad_tol) {
  auto shifted = [&](double delta) {
    gauss::State s = x;
    if (in_p) {
      s.p[0] += delta;
    } else {
      s.xi[0] += delta;
    }
    const Estimate e = semigroup_quadrature(f, t, s, quad_tol);
    if (!(e.value > 0)) {
      throw std::runtime_error("rlsi gradient: semigroup value not positive");
    }
    return std::pair<double, double>(std::log(e.value), e.ci / e.value);
  };
  const auto [g1, n1] = shifted(step);
  const auto [gm1, nm1] = shifted(-step);
  const auto [g2, n2] = shifted(2.0 * step);
  const auto [gm2, nm2] = shifted(-2.0 * step);
  LogDerivative d;
  d.value = (g1 - gm1) / (2.0 * step);
  const double third =
      (g2 - 2.0 * g1 + 2.0 * gm1 - gm2) / (2.0 * step * step * step);
  // Quadrature noise feeds `third` too; widen it before the truncation term.
  const double third_noise =
      (n2 + nm2 + 2.0 * (n1 + nm1)) / (2.0 * step * step * step);
  const double truncation =
      (std::abs(third) + third_noise) * step * step / 6.0;
  const double noise = (n1 + nm1) / (2.0 * step);
  d.budget = truncation + noise;
  return d;
}

}  // namespace

InequalityReport check_rlsi(const registry::BoundedFunction& f, double t,
                            const gauss::State& x, const RlsiOptions& opt) {
  if (!f.strictly_positive) {
    throw std::invalid_argument("check_rlsi: " + f.name +
                                " is not strictly positive");
  }
  if (x.dim() != 1) {
    throw std::invalid_argument("check_rlsi: one coordinate only");
  }
  if (!(opt.m > 0) || !(opt.M >= opt.m)) {
    throw std::invalid_argument("check_rlsi: need 0 < m <= M");
  }
  const LogDerivative dp =
      log_gradient(f.eval, t, x, /*in_p=*/true, opt.fd_step, opt.quad_tol);
  const LogDerivative dxi =
      log_gradient(f.eval, t, x, /*in_p=*/false, opt.fd_step, opt.quad_tol);

  const double c1 = 0.5 * opt.m * t;
  const double c2 = opt.m * opt.m * t * t / 12.0;
  const double twisted = dp.value - c1 * dxi.value;
  const double lhs_value = twisted * twisted + c2 * dxi.value * dxi.value;
  const double dlhs_dp = 2.0 * twisted;
  const double dlhs_dxi = -2.0 * c1 * twisted + 2.0 * c2 * dxi.value;
  double lhs_budget = std::abs(dlhs_dp) * dp.budget +
                      std::abs(dlhs_dxi) * dxi.budget;
  // Second-order remainder of the error propagation.
  lhs_budget += dp.budget * dp.budget +
                (c1 * c1 + c2 + 1.0) * dxi.budget * dxi.budget;

  const Estimate ep = semigroup_quadrature(f.eval, t, x, opt.quad_tol);
  StateFn flnf = [&f](std::span<const double> p, std::span<const double> xi) {
    const double v = f(p, xi);
    return v > 0 ? v * std::log(v) : 0.0;
  };
  const Estimate ee = semigroup_quadrature(flnf, t, x, opt.quad_tol);
  if (!(ep.value > 0)) {
    throw std::runtime_error("check_rlsi: semigroup value not positive");
  }
  const double constant = opt.generalized ? opt.M / (opt.m * t) : 2.0 / t;
  const double rhs_value =
      constant * (ee.value / ep.value - std::log(ep.value));
  const double rhs_budget =
      constant * (ee.ci / ep.value +
                  (std::abs(ee.value) / (ep.value * ep.value) + 1.0 / ep.value) *
                      ep.ci);

  const Estimate lhs = Estimate::from_linear(lhs_value, lhs_budget, 0);
  const Estimate rhs = Estimate::from_linear(rhs_value, rhs_budget, 0);
  return make_report("rlsi:" + f.name, lhs, rhs, /*statistical=*/false,
                     /*log_domain=*/false, 0);
}

std::vector<InequalityReport> check_rn_bounds(
    double q, double t, const gauss::Shift& shift,
    const std::vector<bounds::RnStyle>& styles, const drift::DriftSpec* spec) {
  if (!(q > 1)) throw std::invalid_argument("check_rn_bounds: q must exceed 1");
  const double lhs_log = gauss::lq_log_norm_exact(t, shift, q);
  const Estimate lhs = Estimate::from_log(lhs_log, 0.0, 0);
  std::vector<InequalityReport> out;
  out.reserve(styles.size());
  for (const auto style : styles) {
    const bounds::Bound b = bounds::rn_bound(style, q, t, shift, spec);
    Estimate rhs = Estimate::from_log(b.log_value, 0.0, 0);
    if (b.divergent) rhs = Estimate::from_log(kInf, 0.0, 0);
    out.push_back(make_report("rn:" + bounds::to_string(style), lhs, rhs,
                              /*statistical=*/false, /*log_domain=*/true, 0));
  }
  return out;
}

Estimate estimate_rn_lq_norm_mc(double q, double t, const gauss::Shift& shift,
                                const McOptions& opt) {
  if (!(q > 1)) throw std::invalid_argument("rn mc: q must exceed 1");
  const gauss::State origin = gauss::zero_state(shift.dim());
  const std::int64_t blocks = parallel::block_count(opt.samples);
  struct Part {
    stats::LogSum mq;   // q * log RN
    stats::LogSum m2q;  // 2q * log RN
  };
  std::vector<Part> parts(static_cast<std::size_t>(blocks));
  parallel::for_each_block(blocks, opt.workers, [&](std::int64_t bi) {
    const auto range = parallel::block_range(bi, opt.samples);
    Part part;
    for (std::int64_t rep = range.begin; rep < range.end; ++rep) {
      const gauss::State s = gauss::sample_exact(
          t, origin, opt.seed, static_cast<std::uint64_t>(rep));
      const double log_rn = gauss::rn_log_derivative_exact(t, shift, s);
      part.mq.add_log(q * log_rn);
      part.m2q.add_log(2.0 * q * log_rn);
    }
    parts[static_cast<std::size_t>(bi)] = part;
  });
  const Part total = parallel::pairwise_combine(
      parts, [](const Part& a, const Part& b) {
        Part c;
        c.mq = stats::merge(a.mq, b.mq);
        c.m2q = stats::merge(a.m2q, b.m2q);
        return c;
      });
  const double log_mean_q = total.mq.log_mean();

  // Sampling variance of RN^q, in log scale: the larger of the closed-form
  // Gaussian value and the empirical one.
  const double closed_var = stats::log_sub(
      gauss::rn_log_moment(t, shift, 2.0 * q),
      2.0 * gauss::rn_log_moment(t, shift, q));
  double log_var = closed_var;
  const double emp_mean_2q = total.m2q.log_mean();
  if (emp_mean_2q > 2.0 * log_mean_q) {
    log_var = std::max(log_var, stats::log_sub(emp_mean_2q, 2.0 * log_mean_q));
  }
  const double log_se =
      0.5 * log_var - 0.5 * std::log(static_cast<double>(opt.samples));
  double ci_log_mean = stats::kZ99 * std::exp(log_se - log_mean_q);
  if (!std::isfinite(ci_log_mean)) ci_log_mean = kInf;
  return Estimate::from_log(log_mean_q / q, ci_log_mean / q, opt.samples);
}

std::vector<InequalityReport> check_rn_bounds_mc(
    double q, double t, const gauss::Shift& shift,
    const std::vector<bounds::RnStyle>& styles, const McOptions& opt,
    const drift::DriftSpec* spec) {
  const Estimate lhs = estimate_rn_lq_norm_mc(q, t, shift, opt);
  std::vector<InequalityReport> out;
  out.reserve(styles.size());
  for (const auto style : styles) {
    const bounds::Bound b = bounds::rn_bound(style, q, t, shift, spec);
    Estimate rhs = Estimate::from_log(b.log_value, 0.0, 0);
    if (b.divergent) rhs = Estimate::from_log(kInf, 0.0, 0);
    out.push_back(make_report("rn_mc:" + bounds::to_string(style), lhs, rhs,
                              /*statistical=*/true, /*log_domain=*/true,
                              opt.seed));
  }
  return out;
}

Estimate estimate_girsanov_moment(double r, double t, const gauss::Shift& shift,
                                  const McOptions& opt) {
  const bounds::GirsanovShift g = bounds::girsanov_coefficients(t, shift);
  const gauss::State origin = gauss::zero_state(shift.dim());
  const std::int64_t blocks = parallel::block_count(opt.samples);
  std::vector<stats::Moments> parts(static_cast<std::size_t>(blocks));
  parallel::for_each_block(blocks, opt.workers, [&](std::int64_t bi) {
    const auto range = parallel::block_range(bi, opt.samples);
    stats::Moments m;
    for (std::int64_t rep = range.begin; rep < range.end; ++rep) {
      const gauss::State s = gauss::sample_exact(
          t, origin, opt.seed, static_cast<std::uint64_t>(rep));
      const double log_j = bounds::girsanov_log_density(g, s.p, s.xi);
      m.add(std::exp(r * log_j));
    }
    parts[static_cast<std::size_t>(bi)] = m;
  });
  const stats::Moments total = parallel::pairwise_combine(
      parts, [](const stats::Moments& a, const stats::Moments& b) {
        return stats::merge(a, b);
      });
  // E[J^s] = exp((s^2 - s)/2 |gamma|^2); the closed-form variance keeps the
  // interval honest when the empirical one underestimates the tail.
  const double g2 = g.gamma_norm_sq;
  const double closed_var =
      std::exp((4.0 * r * r - 2.0 * r) / 2.0 * g2) -
      std::exp((r * r - r) * g2);
  const double var = std::max(total.variance(), closed_var);
  const double ci =
      stats::kZ99 * std::sqrt(var / static_cast<double>(total.n));
  return Estimate::from_linear(total.mean(), ci, opt.samples);
}

namespace {

struct StudyContext {
  const ConvergenceOptions& opt;
  std::vector<double> times;
  std::vector<double> weights;   // ambient weight per coordinate, 1-based i-1
  std::vector<int> ranks;
};

// Sup over the grid of sqrt(base_sq + int_sq) where the truncated object
// keeps coordinate columns bitwise and zeroes the dropped ones; kept columns
// therefore cancel exactly and the full rank reads off as literal zero.
double sup_error_standard(const wiener::PathGrid& path,
                          const std::vector<std::vector<double>>& integrals,
                          const StudyContext& ctx, int rank) {
  const int L = path.n_times();
  const int n = path.n_coords();
  double sup = 0;
  for (int l = 0; l < L; ++l) {
    double base_sq = 0;
    for (int i = 0; i < n; ++i) {
      const double full = path.coords[static_cast<std::size_t>(i)]
                                     [static_cast<std::size_t>(l)];
      const double trunc = (i < rank) ? full : 0.0;
      const double d = full - trunc;
      base_sq += ctx.weights[static_cast<std::size_t>(i)] * d * d;
    }
    double int_sq = 0;
    for (int i = 0; i < n; ++i) {
      const double full = integrals[static_cast<std::size_t>(i)]
                                   [static_cast<std::size_t>(l)];
      const double trunc = (i < rank) ? full : 0.0;
      const double d = full - trunc;
      int_sq += ctx.weights[static_cast<std::size_t>(i)] * d * d;
    }
    sup = std::max(sup, std::sqrt(base_sq + int_sq));
  }
  return sup;
}

std::vector<std::vector<double>> drift_rows(const drift::DriftSpec& spec,
                                            const wiener::PathGrid& path,
                                            int rank_or_full) {
  const int L = path.n_times();
  const int n = path.n_coords();
  const int r = spec.r();
  std::vector<double> w(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> rows(
      static_cast<std::size_t>(r),
      std::vector<double>(static_cast<std::size_t>(L)));
  for (int l = 0; l < L; ++l) {
    for (int i = 0; i < n; ++i) {
      const double v = path.coords[static_cast<std::size_t>(i)]
                                  [static_cast<std::size_t>(l)];
      w[static_cast<std::size_t>(i)] = (i < rank_or_full) ? v : 0.0;
    }
    for (int j = 1; j <= r; ++j) {
      rows[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(l)] =
          drift::component_value(spec, j, w);
    }
  }
  return rows;
}

double sup_error_drift(const wiener::PathGrid& path,
                       const std::vector<std::vector<double>>& int_full,
                       const std::vector<std::vector<double>>& int_trunc,
                       const StudyContext& ctx, int rank, bool sequence) {
  const int L = path.n_times();
  const int n = path.n_coords();
  const int r = static_cast<int>(int_full.size());
  double sup = 0;
  for (int l = 0; l < L; ++l) {
    double base_sq = 0;
    for (int i = 0; i < n; ++i) {
      const double full = path.coords[static_cast<std::size_t>(i)]
                                     [static_cast<std::size_t>(l)];
      const double trunc = (i < rank) ? full : 0.0;
      const double d = full - trunc;
      base_sq += ctx.weights[static_cast<std::size_t>(i)] * d * d;
    }
    double int_sq = 0;
    for (int j = 0; j < r; ++j) {
      const double full = int_full[static_cast<std::size_t>(j)]
                                  [static_cast<std::size_t>(l)];
      // Sequence target: components past the rank are dropped entirely.
      const double trunc = (sequence && j >= rank)
                               ? 0.0
                               : int_trunc[static_cast<std::size_t>(j)]
                                          [static_cast<std::size_t>(l)];
      const double d = full - trunc;
      const double wj = sequence ? ctx.weights[static_cast<std::size_t>(j)] : 1.0;
      int_sq += wj * d * d;
    }
    sup = std::max(sup, std::sqrt(base_sq + int_sq));
  }
  return sup;
}

}  // namespace

ConvergenceStudy convergence_study(const std::vector<int>& ranks,
                                   const ConvergenceOptions& opt) {
  if (ranks.empty()) throw std::invalid_argument("convergence: no ranks");
  for (std::size_t k = 0; k < ranks.size(); ++k) {
    if (ranks[k] < 1 || ranks[k] > opt.n_coords) {
      throw std::invalid_argument("convergence: rank outside [1, n_coords]");
    }
    if (k > 0 && ranks[k] <= ranks[k - 1]) {
      throw std::invalid_argument("convergence: ranks must increase");
    }
  }
  const bool needs_spec = opt.target != ConvergenceTarget::Standard;
  if (needs_spec && opt.spec == nullptr) {
    throw std::invalid_argument("convergence: drift target needs a spec");
  }
  if (opt.target == ConvergenceTarget::Sequence) {
    if (opt.spec->kind != drift::TargetKind::Sequence) {
      throw std::invalid_argument(
          "convergence: sequence target needs a sequence drift");
    }
    for (int rk : ranks) {
      if (rk > opt.spec->r()) {
        throw std::invalid_argument(
            "convergence: rank exceeds the component count");
      }
    }
  }

  StudyContext ctx{opt, wiener::uniform_grid(opt.T, opt.grid_steps), {}, ranks};
  const wiener::Model model = wiener::Model::with_default_weights(opt.n_coords);
  ctx.weights = model.weights;

  ConvergenceStudy study;
  study.errors.assign(ranks.size(),
                      std::vector<double>(
                          static_cast<std::size_t>(opt.replicates), 0.0));

  const std::int64_t blocks = parallel::block_count(opt.replicates);
  parallel::for_each_block(blocks, opt.workers, [&](std::int64_t bi) {
    const auto range = parallel::block_range(bi, opt.replicates);
    for (std::int64_t rep = range.begin; rep < range.end; ++rep) {
      const wiener::PathGrid path = wiener::sample_brownian(
          ctx.times, opt.n_coords, opt.seed, static_cast<std::uint64_t>(rep));
      if (opt.target == ConvergenceTarget::Standard) {
        std::vector<std::vector<double>> integrals(
            static_cast<std::size_t>(opt.n_coords));
        for (int i = 0; i < opt.n_coords; ++i) {
          integrals[static_cast<std::size_t>(i)] = wiener::trapezoid_integral(
              ctx.times, path.coords[static_cast<std::size_t>(i)]);
        }
        for (std::size_t k = 0; k < ranks.size(); ++k) {
          study.errors[k][static_cast<std::size_t>(rep)] =
              sup_error_standard(path, integrals, ctx, ranks[k]);
        }
      } else {
        const bool sequence = opt.target == ConvergenceTarget::Sequence;
        const auto rows_full = drift_rows(*opt.spec, path, opt.n_coords);
        std::vector<std::vector<double>> int_full(rows_full.size());
        for (std::size_t j = 0; j < rows_full.size(); ++j) {
          int_full[j] = wiener::trapezoid_integral(ctx.times, rows_full[j]);
        }
        for (std::size_t k = 0; k < ranks.size(); ++k) {
          const auto rows_trunc = drift_rows(*opt.spec, path, ranks[k]);
          std::vector<std::vector<double>> int_trunc(rows_trunc.size());
          for (std::size_t j = 0; j < rows_trunc.size(); ++j) {
            int_trunc[j] =
                wiener::trapezoid_integral(ctx.times, rows_trunc[j]);
          }
          study.errors[k][static_cast<std::size_t>(rep)] = sup_error_drift(
              path, int_full, int_trunc, ctx, ranks[k], sequence);
        }
      }
    }
  });

  for (std::size_t k = 0; k < ranks.size(); ++k) {
    stats::Moments m;
    double max_err = 0;
    double sum_sq = 0;
    for (double e : study.errors[k]) {
      m.add(e);
      max_err = std::max(max_err, e);
      sum_sq += e * e;
    }
    ConvergenceRecord rec;
    rec.rank = ranks[k];
    rec.replicates = opt.replicates;
    rec.mean_error = m.mean();
    rec.max_error = max_err;
    rec.se = m.std_error();
    rec.mean_sq_error = sum_sq / static_cast<double>(opt.replicates);
    rec.envelope = opt.T * wiener::tail_weight_sum(model, ranks[k]);
    study.records.push_back(rec);
  }

  // One-sided paired comparison of adjacent ranks: coarser rank should not
  // beat the finer one by more than replicate noise.
  for (std::size_t k = 0; k + 1 < ranks.size(); ++k) {
    stats::Moments diff;
    for (std::size_t rep = 0; rep < study.errors[k].size(); ++rep) {
      diff.add(study.errors[k][rep] - study.errors[k + 1][rep]);
    }
    if (diff.mean() < -kZ99OneSided * diff.std_error()) {
      study.trend_ok = false;
    }
  }
  return study;
}

}  // namespace kolmo::verify
