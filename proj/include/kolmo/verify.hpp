#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kolmo/bounds.hpp"
#include "kolmo/drift.hpp"
#include "kolmo/kolmo_gauss.hpp"
#include "kolmo/registry.hpp"
#include "kolmo/stats.hpp"

namespace kolmo::verify {

enum class Verdict { Holds, Violated, Inconclusive };

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

// Estimate with both linear and log representations carried together, so
// astronomically large values degrade to log-only reporting instead of
// overflowing. `ci` and `ci_log` are 99% half widths in their domains.
struct Estimate {
  double value = 0;
  double ci = 0;
  double log_value = 0;
  double ci_log = 0;
  long samples = 0;

  static Estimate from_linear(double value, double ci, long samples = 0);
  static Estimate from_log(double log_value, double ci_log, long samples = 0);
};

struct InequalityReport {
  std::string name;
  Estimate lhs, rhs;
  // Statistical checks separate confidence intervals; deterministic checks
  // treat the widths as error budgets (tolerance on the HOLDS side).
  bool statistical = true;
  // Domain in which margin and verdict are computed.
  bool log_domain = true;
  Verdict verdict = Verdict::Inconclusive;
  std::uint64_t seed = 0;

  double margin() const { return rhs.value - lhs.value; }
  double log_margin() const { return rhs.log_value - lhs.log_value; }
  long samples() const { return std::max(lhs.samples, rhs.samples); }
};

// Statistical rule: HOLDS iff margin >= width, VIOLATED iff margin < -width,
// INCONCLUSIVE in between.  Deterministic rule: HOLDS iff margin >= -width,
// VIOLATED otherwise; never INCONCLUSIVE.
Verdict assess(double margin, double total_width, bool statistical);
InequalityReport make_report(std::string name, const Estimate& lhs,
                             const Estimate& rhs, bool statistical,
                             bool log_domain, std::uint64_t seed);

// Observable of a (position block, integral block) state.
using StateFn =
    std::function<double(std::span<const double>, std::span<const double>)>;

struct McOptions {
  long samples = 100000;
  int workers = 1;
  std::uint64_t seed = 1;
  int grid_steps = 256;  // time resolution for drift-path simulation
};

// P_t f by kernel quadrature.  Standard pair, one coordinate only; the
// integration box covers mean +- 8.5 standard deviations per axis.
Estimate semigroup_quadrature(const StateFn& f, double t, const gauss::State& x,
                              double abs_tol = 1e-10);

// P_t f by exact endpoint sampling.  Standard pair, any dimension.  The
// result is a pure function of (f, t, x, seed, samples), not of workers.
Estimate semigroup_mc(const StateFn& f, double t, const gauss::State& x,
                      const McOptions& opt);

// Joint sample moments of (B_i, I_i) per coordinate over exact endpoint
// draws; feeds both the sampling-exactness checks and the moment reports.
struct ExactMomentSummary {
  std::vector<stats::Moments2> per_coord;
};

ExactMomentSummary exact_pair_moments(double t, const gauss::State& start,
                                      const McOptions& opt);

// Endpoint ensemble of the drift diffusion started at (p0, 0).  Stored per
// replicate so several checks at the same start can share one simulation;
// the integral-block start enters additively at evaluation time.
struct EndpointEnsemble {
  std::vector<std::vector<double>> p;   // [replicate][coordinate]
  std::vector<std::vector<double>> xi;  // [replicate][component]

  long samples() const { return static_cast<long>(p.size()); }
};

EndpointEnsemble simulate_drift_ensemble(const drift::DriftSpec& spec, double t,
                                         std::span<const double> p0,
                                         int n_coords, const McOptions& opt);
Estimate ensemble_mean(const EndpointEnsemble& ens, const StateFn& f,
                       std::span<const double> xi0);

// (P_t f)^alpha(x) against the constant times P_t f^alpha(y).
InequalityReport check_wang_quadrature(const registry::BoundedFunction& f,
                                       double alpha, double t,
                                       const gauss::State& x,
                                       const gauss::State& y,
                                       double abs_tol = 1e-10);
InequalityReport check_wang_mc(const registry::BoundedFunction& f, double alpha,
                               double t, const gauss::State& x,
                               const gauss::State& y, const McOptions& opt);
// Drift-diffusion variant over precomputed ensembles.  Passing the same
// ensemble for x and y makes the x = y case an exact sample-level convexity
// statement, so it can never read as a violation.
InequalityReport check_wang_drift(const registry::BoundedFunction& f,
                                  double alpha, double t,
                                  const bounds::DriftState& x,
                                  const bounds::DriftState& y,
                                  const drift::DriftSpec& spec,
                                  drift::AssumptionMode mode,
                                  const EndpointEnsemble& ens_x,
                                  const EndpointEnsemble& ens_y,
                                  std::uint64_t seed);

struct RlsiOptions {
  double m = 1;
  double M = 1;
  // false: entropy constant 2/t (the standard pair display);
  // true: M/(m t) (the drift display, which the standard case embeds at m=M=1).
  bool generalized = false;
  double fd_step = 1e-4;
  double quad_tol = 1e-10;
};

// Gradient expression of ln P_t f against the scaled local entropy, both by
// quadrature; finite-difference budgets (truncation estimated from a wider
// stencil, plus quadrature noise) are folded into the report widths.
InequalityReport check_rlsi(const registry::BoundedFunction& f, double t,
                            const gauss::State& x, const RlsiOptions& opt = {});

// Closed-form L^q norm of the shifted-law density ratio against each
// requested bound style (deterministic, zero-width lhs).
std::vector<InequalityReport> check_rn_bounds(
    double q, double t, const gauss::Shift& shift,
    const std::vector<bounds::RnStyle>& styles,
    const drift::DriftSpec* spec = nullptr);

// MC estimate of E[(dnu_shift/dnu)^q]^{1/q} over exact endpoint samples,
// aggregated in log scale.  The CI uses the larger of the closed-form and
// empirical variances of RN^q, so infeasibly heavy tails surface as honest
// astronomically wide intervals instead of false confidence.
Estimate estimate_rn_lq_norm_mc(double q, double t, const gauss::Shift& shift,
                                const McOptions& opt);
std::vector<InequalityReport> check_rn_bounds_mc(
    double q, double t, const gauss::Shift& shift,
    const std::vector<bounds::RnStyle>& styles, const McOptions& opt,
    const drift::DriftSpec* spec = nullptr);

// E[J^r] of the change-of-measure density, J evaluated from exact endpoint
// statistics.  Linear-domain moments (r is small); CI as above.
Estimate estimate_girsanov_moment(double r, double t, const gauss::Shift& shift,
                                  const McOptions& opt);

struct ConvergenceRecord {
  int rank = 0;
  int replicates = 0;
  double mean_error = 0;     // mean over replicates of the sup-norm error
  double max_error = 0;
  double se = 0;             // standard error of mean_error
  double mean_sq_error = 0;
  double envelope = 0;       // T times the weight tail past the rank
};

enum class ConvergenceTarget { Standard, Finite, Sequence };

struct ConvergenceOptions {
  ConvergenceTarget target = ConvergenceTarget::Standard;
  const drift::DriftSpec* spec = nullptr;  // Finite and Sequence targets
  int n_coords = 256;
  double T = 1;
  int grid_steps = 64;
  int replicates = 100;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRecord> records;
  std::vector<std::vector<double>> errors;  // [rank index][replicate]
  bool trend_ok = true;  // adjacent-rank one-sided paired test at 99%
};

// Coupled truncation study: each replicate samples the full-rank path once
// and measures every rank against it, so rank errors are positively coupled
// and the full rank is exactly zero.
ConvergenceStudy convergence_study(const std::vector<int>& ranks,
                                   const ConvergenceOptions& opt);

}  // namespace kolmo::verify
