#include "kolmo/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kolmo/rng.hpp"

namespace kolmo::drift {

namespace {

class IdentityProfile final : public Profile {
 public:
  double value(double x) const override { return x; }
  double slope(double) const override { return 1.0; }
  std::optional<SlopeRange> certified_slope_range() const override {
    return SlopeRange{1.0, 1.0};
  }
  std::string describe() const override { return "identity"; }
};

class AffineProfile final : public Profile {
 public:
  explicit AffineProfile(double c) : c_(c) {}
  double value(double x) const override { return c_ * x; }
  double slope(double) const override { return c_; }
  std::optional<SlopeRange> certified_slope_range() const override {
    return SlopeRange{c_, c_};
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "affine(" << c_ << ")";
    return os.str();
  }

 private:
  double c_;
};

class AffineTanhProfile final : public Profile {
 public:
  AffineTanhProfile(double a, double b) : a_(a), b_(b) {}
  double value(double x) const override { return a_ * x + b_ * std::tanh(x); }
  double slope(double x) const override {
    const double c = std::cosh(x);
    return a_ + b_ / (c * c);
  }
  std::optional<SlopeRange> certified_slope_range() const override {
    // sech^2 ranges over (0, 1]; the infimum a is a valid lower bound.
    return SlopeRange{a_, a_ + b_};
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "affine_tanh(" << a_ << "," << b_ << ")";
    return os.str();
  }

 private:
  double a_, b_;
};

// Hermite bridge on [u0, u1]: value and first derivative matched to 0 at u0
// and to (v1, d1) at u1. The minimal-degree solution (cubic); its derivative
// is the quadratic  q'(s)/w = A s^2 + B s  in s = (u-u0)/w, so the exact
// range over the band comes from the endpoints and the interior vertex.
struct Bridge {
  double u0 = 0, u1 = 0, w = 0;
  double v1 = 0, d1 = 0;
  double A = 0, B = 0;  // derivative coefficients in s

  static Bridge make(double u0, double u1, double v1, double d1) {
    Bridge b;
    b.u0 = u0;
    b.u1 = u1;
    b.w = u1 - u0;
    b.v1 = v1;
    b.d1 = d1;
    b.A = (-6.0 * v1 + 3.0 * b.w * d1) / b.w;
    b.B = (6.0 * v1 - 2.0 * b.w * d1) / b.w;
    return b;
  }

  double value(double u) const {
    const double s = (u - u0) / w;
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return h01 * v1 + h11 * w * d1;
  }

  double deriv(double u) const {
    const double s = (u - u0) / w;
    return A * s * s + B * s;
  }

  SlopeRange deriv_range() const {
    double lo = std::min(0.0, d1);
    double hi = std::max(0.0, d1);
    if (A != 0.0) {
      const double s_star = -B / (2.0 * A);
      if (s_star > 0.0 && s_star < 1.0) {
        const double v = A * s_star * s_star + B * s_star;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    return SlopeRange{lo, hi};
  }
};

// x + amp * G(x), G even: G(x) = Ghat(|x|) with Ghat = 0 / bridge / log u.
class LogPerturbedProfile final : public Profile {
 public:
  LogPerturbedProfile(double amp, double eps) : amp_(amp), eps_(eps) {
    if (!(eps > 0) || !(eps < 1)) {
      throw std::invalid_argument("log_perturbed_profile: eps must lie in (0,1)");
    }
    if (!(amp >= 0)) {
      throw std::invalid_argument("log_perturbed_profile: amplitude must be >= 0");
    }
    const double u1 = 1.0 + eps;
    bridge_ = Bridge::make(1.0 - eps, u1, std::log(u1), 1.0 / u1);
  }

  double value(double x) const override { return x + amp_ * ghat(std::abs(x)); }

  double slope(double x) const override {
    const double u = std::abs(x);
    const double s = (x >= 0 ? 1.0 : -1.0);
    return 1.0 + amp_ * s * ghat_deriv(u);
  }

  std::optional<SlopeRange> certified_slope_range() const override {
    // Ghat' over [u0, inf): the band range plus (0, 1/u1] outside; d(G)/dx is
    // sgn(x) Ghat'(|x|), so the composite slope range is symmetric in the
    // largest magnitude.
    const SlopeRange band = bridge_.deriv_range();
    const double outer_hi = 1.0 / bridge_.u1;
    const double hi = std::max(band.hi, outer_hi);
    const double lo = std::min(band.lo, 0.0);
    const double mag = std::max(hi, -lo);
    return SlopeRange{1.0 - amp_ * mag, 1.0 + amp_ * mag};
  }

  std::optional<double> perturbation_amplitude() const override { return amp_; }

  std::string describe() const override {
    std::ostringstream os;
    os << "log_perturbed(amp=" << amp_ << ",eps=" << eps_ << ")";
    return os.str();
  }

 private:
  double ghat(double u) const {
    if (u <= bridge_.u0) return 0.0;
    if (u >= bridge_.u1) return std::log(u);
    return bridge_.value(u);
  }
  double ghat_deriv(double u) const {
    if (u <= bridge_.u0) return 0.0;
    if (u >= bridge_.u1) return 1.0 / u;
    return bridge_.deriv(u);
  }

  double amp_, eps_;
  Bridge bridge_;
};

// 2x + amp * G(x), G odd: G(x) = sgn(x) Ghat(|x|), Ghat = 0 / bridge /
// (-u + u^{-p}).
class PowerPerturbedProfile final : public Profile {
 public:
  PowerPerturbedProfile(double amp, double eps, double p)
      : amp_(amp), eps_(eps), p_(p) {
    if (!(eps > 0) || !(eps < 1)) {
      throw std::invalid_argument("power_perturbed_profile: eps must lie in (0,1)");
    }
    if (!(amp >= 0)) {
      throw std::invalid_argument("power_perturbed_profile: amplitude must be >= 0");
    }
    if (!(p > 0)) {
      throw std::invalid_argument("power_perturbed_profile: p must be positive");
    }
    const double u1 = 1.0 + eps;
    const double v1 = -u1 + std::pow(u1, -p);
    const double d1 = -1.0 - p * std::pow(u1, -p - 1.0);
    bridge_ = Bridge::make(1.0 - eps, u1, v1, d1);
  }

  double value(double x) const override {
    const double s = (x >= 0 ? 1.0 : -1.0);
    return 2.0 * x + amp_ * s * ghat(std::abs(x));
  }

  double slope(double x) const override {
    // Odd G has even derivative.
    return 2.0 + amp_ * ghat_deriv(std::abs(x));
  }

  std::optional<SlopeRange> certified_slope_range() const override {
    const SlopeRange band = bridge_.deriv_range();
    // Outside the band the derivative -1 - p u^{-p-1} increases toward -1.
    const double outer_lo = -1.0 - p_ * std::pow(bridge_.u1, -p_ - 1.0);
    const double lo = std::min({band.lo, outer_lo, 0.0});
    const double hi = std::max({band.hi, -1.0, 0.0});
    return SlopeRange{2.0 + amp_ * lo, 2.0 + amp_ * hi};
  }

  std::optional<double> perturbation_amplitude() const override { return amp_; }

  std::string describe() const override {
    std::ostringstream os;
    os << "power_perturbed(amp=" << amp_ << ",eps=" << eps_ << ",p=" << p_ << ")";
    return os.str();
  }

 private:
  double ghat(double u) const {
    if (u <= bridge_.u0) return 0.0;
    if (u >= bridge_.u1) return -u + std::pow(u, -p_);
    return bridge_.value(u);
  }
  double ghat_deriv(double u) const {
    if (u <= bridge_.u0) return 0.0;
    if (u >= bridge_.u1) return -1.0 - p_ * std::pow(u, -p_ - 1.0);
    return bridge_.deriv(u);
  }

  double amp_, eps_, p_;
  Bridge bridge_;
};

class CustomProfile final : public Profile {
 public:
  CustomProfile(std::string name, std::function<double(double)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  double value(double x) const override { return fn_(x); }
  double slope(double x) const override {
    const double h = 1e-5 * (1.0 + std::abs(x));
    return (fn_(x + h) - fn_(x - h)) / (2.0 * h);
  }
  std::string describe() const override { return "custom(" + name_ + ")"; }

 private:
  std::string name_;
  std::function<double(double)> fn_;
};

void check_component(const DriftComponent& c) {
  if (!c.profile) throw std::invalid_argument("drift component without profile");
  if (c.indices.empty() && c.zero_padded == 0) {
    throw std::invalid_argument("drift component owns no coordinates");
  }
  for (std::size_t i = 0; i < c.indices.size(); ++i) {
    if (c.indices[i] < 1) {
      throw std::invalid_argument("drift component indices are 1-based");
    }
    if (i > 0 && c.indices[i] <= c.indices[i - 1]) {
      throw std::invalid_argument(
          "drift component indices must increase strictly");
    }
  }
  if (!(c.m <= c.M)) {
    throw std::invalid_argument("drift component bounds must satisfy m <= M");
  }
}

void check_spec(const DriftSpec& spec) {
  if (spec.components.empty()) {
    throw std::invalid_argument("drift spec has no components");
  }
  for (const auto& c : spec.components) check_component(c);
}

}  // namespace

ProfilePtr identity_profile() { return std::make_shared<IdentityProfile>(); }

ProfilePtr affine_profile(double c) {
  return std::make_shared<AffineProfile>(c);
}

ProfilePtr affine_tanh_profile(double a, double b) {
  if (!(b >= 0)) {
    throw std::invalid_argument("affine_tanh_profile: b must be >= 0");
  }
  return std::make_shared<AffineTanhProfile>(a, b);
}

ProfilePtr log_perturbed_profile(double amp, double eps) {
  return std::make_shared<LogPerturbedProfile>(amp, eps);
}

ProfilePtr power_perturbed_profile(double amp, double eps, double p) {
  return std::make_shared<PowerPerturbedProfile>(amp, eps, p);
}

ProfilePtr custom_profile(std::string name, std::function<double(double)> fn) {
  if (!fn) throw std::invalid_argument("custom_profile: empty function");
  return std::make_shared<CustomProfile>(std::move(name), std::move(fn));
}

int DriftSpec::max_index() const {
  int mx = 0;
  for (const auto& c : components) {
    if (!c.indices.empty()) mx = std::max(mx, c.indices.back());
  }
  return mx;
}

double component_value(const DriftSpec& spec, int j,
                       std::span<const double> w) {
  if (j < 1 || j > spec.r()) {
    throw std::invalid_argument("component_value: component index out of range");
  }
  const DriftComponent& c = spec.components[static_cast<std::size_t>(j - 1)];
  double acc = 0;
  for (int i : c.indices) {
    const double x = (static_cast<std::size_t>(i) <= w.size())
                         ? w[static_cast<std::size_t>(i - 1)]
                         : 0.0;
    acc += c.profile->value(x);
  }
  if (c.zero_padded > 0) acc += c.zero_padded * c.profile->value(0.0);
  return acc;
}

std::function<double(std::span<const double>)> component_function(
    const DriftSpec& spec, int j) {
  if (j < 1 || j > spec.r()) {
    throw std::invalid_argument("component_function: index out of range");
  }
  DriftSpec copy = spec;
  return [copy, j](std::span<const double> w) {
    return component_value(copy, j, w);
  };
}

DriftComponent certified_component(std::vector<int> indices,
                                   ProfilePtr profile) {
  if (!profile) throw std::invalid_argument("certified_component: no profile");
  const auto range = profile->certified_slope_range();
  if (!range) {
    throw std::invalid_argument(
        "certified_component: profile has no certified slope range");
  }
  DriftComponent c;
  c.indices = std::move(indices);
  c.profile = std::move(profile);
  c.m = range->lo;
  c.M = range->hi;
  c.certified = true;
  check_component(c);
  return c;
}

DriftComponent declared_component(std::vector<int> indices, ProfilePtr profile,
                                  double m, double M) {
  DriftComponent c;
  c.indices = std::move(indices);
  c.profile = std::move(profile);
  c.m = m;
  c.M = M;
  c.certified = false;
  check_component(c);
  return c;
}

std::string to_string(AssumptionMode mode) {
  switch (mode) {
    case AssumptionMode::Uniform: return "uniform";
    case AssumptionMode::UniformSubset: return "uniform-subset";
    case AssumptionMode::Cylinder: return "cylinder";
    case AssumptionMode::BasisCylinder: return "basis-cylinder";
    case AssumptionMode::CoefficientSequence: return "sequence";
  }
  return "?";
}

AssumptionMode assumption_mode_from_string(const std::string& s) {
  if (s == "uniform") return AssumptionMode::Uniform;
  if (s == "uniform-subset") return AssumptionMode::UniformSubset;
  if (s == "cylinder") return AssumptionMode::Cylinder;
  if (s == "basis-cylinder") return AssumptionMode::BasisCylinder;
  if (s == "sequence") return AssumptionMode::CoefficientSequence;
  throw std::invalid_argument("unknown assumption mode: " + s);
}

std::string to_string(ValidationVerdict v) {
  switch (v) {
    case ValidationVerdict::Pass: return "PASS";
    case ValidationVerdict::Fail: return "FAIL";
    case ValidationVerdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

ValidationReport validate_assumption(const DriftSpec& spec, AssumptionMode mode,
                                     int ambient_dim, int probe_count,
                                     std::uint64_t seed) {
  check_spec(spec);
  if (ambient_dim < 1) {
    throw std::invalid_argument("validate_assumption: ambient_dim must be >= 1");
  }
  ValidationReport report;
  report.mode = mode;
  bool structural_ok = true;
  auto note = [&](const std::string& msg) { report.notes.push_back(msg); };

  // Structural shape.
  const bool needs_single = (mode == AssumptionMode::Uniform ||
                             mode == AssumptionMode::UniformSubset);
  if (needs_single && spec.r() != 1) {
    note("mode requires exactly one component");
    structural_ok = false;
  }
  if (mode == AssumptionMode::Uniform && spec.r() == 1) {
    const auto& idx = spec.components[0].indices;
    bool covers = static_cast<int>(idx.size()) == ambient_dim;
    for (std::size_t i = 0; covers && i < idx.size(); ++i) {
      covers = idx[i] == static_cast<int>(i) + 1;
    }
    if (!covers) {
      note("mode requires the component to own every ambient coordinate");
      structural_ok = false;
    }
  }
  if (mode == AssumptionMode::UniformSubset && spec.r() == 1) {
    if (spec.components[0].indices.empty() ||
        spec.components[0].indices.back() > ambient_dim) {
      note("component indices must lie inside the ambient dimension");
      structural_ok = false;
    }
  }
  if (mode == AssumptionMode::Cylinder || mode == AssumptionMode::BasisCylinder ||
      mode == AssumptionMode::CoefficientSequence) {
    // Disjointness across components.
    std::vector<int> all;
    for (const auto& c : spec.components) {
      all.insert(all.end(), c.indices.begin(), c.indices.end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      note("component index sets must be disjoint");
      structural_ok = false;
    }
    if (mode == AssumptionMode::Cylinder && spec.max_index() > ambient_dim) {
      note("component indices must lie inside the ambient dimension");
      structural_ok = false;
    }
  }
  if (mode == AssumptionMode::CoefficientSequence &&
      spec.kind != TargetKind::Sequence) {
    note("mode requires a sequence-valued drift");
    structural_ok = false;
  }
  if ((mode == AssumptionMode::Cylinder || mode == AssumptionMode::BasisCylinder) &&
      spec.kind != TargetKind::Finite) {
    note("mode requires a finite-dimensional target");
    structural_ok = false;
  }

  // Slope bounds, certificates, probes.
  bool bounds_ok = true;
  bool all_certified = true;
  rng::NormalStream probes(seed, rng::StreamKind::Probe, 0, 0);
  std::uint64_t draw = 0;
  for (int j = 1; j <= spec.r(); ++j) {
    const auto& c = spec.components[static_cast<std::size_t>(j - 1)];
    ComponentCheck check;
    check.component = j;
    check.declared_lo = c.m;
    check.declared_hi = c.M;
    check.certified = c.certified;
    bool ok = c.m > 0;
    if (!ok) note("component bounds must have m > 0");
    if (c.certified) {
      const auto range = c.profile->certified_slope_range();
      if (!range || !(c.m <= range->lo + 1e-12) || !(range->hi <= c.M + 1e-12)) {
        ok = false;
        note("certificate does not cover the declared bounds");
      }
    } else {
      all_certified = false;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int pcount = 0; pcount < probe_count; ++pcount) {
      // Probes on [-4, 4]: covers the perturbation band and the outer pieces.
      const double x = -4.0 + 8.0 * probes.uniform(draw++);
      const double s = c.profile->slope(x);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    check.observed_lo = lo;
    check.observed_hi = hi;
    const double h = 1e-5 * (1.0 + 4.0);
    const double tol = 1e-6 + h * h + 4e-11 / h;
    if (lo < c.m - tol || hi > c.M + tol) {
      ok = false;
      note("finite-difference probes escape the declared slope bounds");
    }
    check.ok = ok;
    bounds_ok = bounds_ok && ok;
    report.components.push_back(check);
  }

  if (mode == AssumptionMode::CoefficientSequence) {
    double acc = 0;
    bool any_amp = false;
    for (const auto& c : spec.components) {
      if (auto amp = c.profile->perturbation_amplitude()) {
        acc += (*amp) * (*amp);
        any_amp = true;
      }
    }
    report.coefficient_sq_sum = acc;
    if (any_amp) {
      note("perturbation amplitudes are square-summable over the materialized "
           "components; the full-sequence condition extends by the declared "
           "amplitude law");
    }
    note("almost-sure convergence of the coefficient series is assumed, not "
         "checked");
  }

  if (!structural_ok || !bounds_ok) {
    report.verdict = ValidationVerdict::Fail;
  } else if (all_certified) {
    report.verdict = ValidationVerdict::Pass;
  } else {
    report.verdict = ValidationVerdict::Inconclusive;
    note("declared bounds hold at every probe but carry no global certificate");
  }
  return report;
}

namespace {

void check_bounds_present(const DriftSpec& spec) {
  for (const auto& c : spec.components) {
    if (!(c.m > 0)) {
      throw std::invalid_argument(
          "drift spec components need positive declared slope bounds");
    }
  }
}

}  // namespace

GeneralizedPath simulate_y(const DriftSpec& spec, const DriftShift* shift,
                           std::span<const double> times, int n_coords,
                           std::uint64_t seed, std::uint64_t replicate) {
  check_spec(spec);
  check_bounds_present(spec);
  if (spec.max_index() > n_coords) {
    throw std::invalid_argument(
        "simulate_y: drift owns coordinates beyond the sampled range");
  }
  GeneralizedPath out;
  out.base = wiener::sample_brownian(times, n_coords, seed, replicate);
  out.low_resolution = times.size() <= 2;

  out.shift_h.assign(static_cast<std::size_t>(n_coords), 0.0);
  out.shift_k.assign(static_cast<std::size_t>(spec.r()), 0.0);
  if (shift) {
    if (shift->h.size() > static_cast<std::size_t>(n_coords)) {
      throw std::invalid_argument("simulate_y: shift h exceeds coordinate count");
    }
    if (shift->k.size() > static_cast<std::size_t>(spec.r())) {
      throw std::invalid_argument("simulate_y: shift k exceeds component count");
    }
    std::copy(shift->h.begin(), shift->h.end(), out.shift_h.begin());
    std::copy(shift->k.begin(), shift->k.end(), out.shift_k.begin());
  }

  for (int i = 0; i < n_coords; ++i) {
    const double hi = out.shift_h[static_cast<std::size_t>(i)];
    if (hi != 0.0) {
      for (double& v : out.base.coords[static_cast<std::size_t>(i)]) v += hi;
    }
  }

  const std::size_t n_times = out.base.times.size();
  out.integral.assign(static_cast<std::size_t>(spec.r()),
                      std::vector<double>(n_times, 0.0));
  std::vector<double> fvals(n_times);
  for (int j = 1; j <= spec.r(); ++j) {
    const auto& c = spec.components[static_cast<std::size_t>(j - 1)];
    std::fill(fvals.begin(), fvals.end(),
              c.zero_padded * c.profile->value(0.0));
    for (int i : c.indices) {
      const auto& col = out.base.coords[static_cast<std::size_t>(i - 1)];
      for (std::size_t l = 0; l < n_times; ++l) {
        fvals[l] += c.profile->value(col[l]);
      }
    }
    auto running = wiener::trapezoid_integral(out.base.times, fvals);
    const double kj = out.shift_k[static_cast<std::size_t>(j - 1)];
    auto& row = out.integral[static_cast<std::size_t>(j - 1)];
    for (std::size_t l = 0; l < n_times; ++l) row[l] = kj + running[l];
  }
  return out;
}

void simulate_y_endpoint(const DriftSpec& spec, const DriftShift* shift,
                         std::span<const double> times, int n_coords,
                         std::uint64_t seed, std::uint64_t replicate,
                         std::span<double> out_p, std::span<double> out_xi) {
  check_spec(spec);
  check_bounds_present(spec);
  if (spec.max_index() > n_coords) {
    throw std::invalid_argument(
        "simulate_y_endpoint: drift owns coordinates beyond the sampled range");
  }
  if (out_p.size() != static_cast<std::size_t>(n_coords) ||
      out_xi.size() != static_cast<std::size_t>(spec.r())) {
    throw std::invalid_argument("simulate_y_endpoint: bad output spans");
  }
  const std::size_t n_times = times.size();
  if (n_times < 2) throw std::invalid_argument("simulate_y_endpoint: bad grid");

  // Coordinate -> owning components (usually one).
  std::vector<std::vector<int>> owners(static_cast<std::size_t>(n_coords));
  for (int j = 1; j <= spec.r(); ++j) {
    for (int i : spec.components[static_cast<std::size_t>(j - 1)].indices) {
      owners[static_cast<std::size_t>(i - 1)].push_back(j);
    }
  }
  for (int j = 0; j < spec.r(); ++j) {
    const auto& c = spec.components[static_cast<std::size_t>(j)];
    double base = (shift && static_cast<std::size_t>(j) < shift->k.size())
                      ? shift->k[static_cast<std::size_t>(j)]
                      : 0.0;
    base += c.zero_padded * c.profile->value(0.0) * times[n_times - 1];
    out_xi[static_cast<std::size_t>(j)] = base;
  }

  for (int i = 0; i < n_coords; ++i) {
    rng::NormalStream stream(seed, rng::StreamKind::BrownianIncrement,
                             static_cast<std::uint64_t>(i), replicate);
    const double hi = (shift && static_cast<std::size_t>(i) < shift->h.size())
                          ? shift->h[static_cast<std::size_t>(i)]
                          : 0.0;
    // Raw Brownian value; the shift is added at each use, in the same
    // association the path sampler produces, to stay bitwise identical to
    // simulate_y over the same grid.
    double b = 0.0;
    const auto& own = owners[static_cast<std::size_t>(i)];
    if (own.empty()) {
      // Only the endpoint matters, but a single Gaussian with the summed
      // variance would change the draw layout, so keep the per-step walk.
      for (std::size_t l = 1; l < n_times; ++l) {
        b += std::sqrt(times[l] - times[l - 1]) * stream.normal(l - 1);
      }
      out_p[static_cast<std::size_t>(i)] = b + hi;
      continue;
    }
    // Trapezoid accumulation of phi(position) per owning component.
    double prev_contrib[8];
    std::vector<double> prev_big;
    double* prev = prev_contrib;
    if (own.size() > 8) {
      prev_big.resize(own.size());
      prev = prev_big.data();
    }
    for (std::size_t o = 0; o < own.size(); ++o) {
      const auto& c = spec.components[static_cast<std::size_t>(own[o] - 1)];
      prev[o] = c.profile->value(b + hi);
    }
    for (std::size_t l = 1; l < n_times; ++l) {
      const double dt = times[l] - times[l - 1];
      b += std::sqrt(dt) * stream.normal(l - 1);
      for (std::size_t o = 0; o < own.size(); ++o) {
        const auto& c = spec.components[static_cast<std::size_t>(own[o] - 1)];
        const double cur = c.profile->value(b + hi);
        out_xi[static_cast<std::size_t>(own[o] - 1)] +=
            0.5 * dt * (prev[o] + cur);
        prev[o] = cur;
      }
    }
    out_p[static_cast<std::size_t>(i)] = b + hi;
  }
}

DriftSpec project_drift(const DriftSpec& spec, int in_rank,
                        const wiener::Projection& out) {
  check_spec(spec);
  if (in_rank < 1) {
    throw std::invalid_argument("project_drift: input rank must be >= 1");
  }
  DriftSpec projected;
  projected.kind = spec.kind;
  projected.name = spec.name + "|projected";
  for (int j = 1; j <= spec.r(); ++j) {
    if (!out.keeps(j)) continue;
    DriftComponent c = spec.components[static_cast<std::size_t>(j - 1)];
    std::vector<int> kept;
    int dropped = 0;
    for (int i : c.indices) {
      if (i <= in_rank) {
        kept.push_back(i);
      } else {
        dropped += 1;
      }
    }
    c.indices = std::move(kept);
    c.zero_padded += dropped;
    projected.components.push_back(std::move(c));
  }
  if (projected.components.empty()) {
    throw std::invalid_argument("project_drift: projection keeps no components");
  }
  return projected;
}

namespace {

DriftSpec make_identity_drift(int n) {
  if (n < 1) throw std::invalid_argument("identity drift needs n >= 1");
  DriftSpec spec;
  spec.kind = TargetKind::Sequence;
  spec.name = "identity";
  for (int j = 1; j <= n; ++j) {
    spec.components.push_back(certified_component({j}, identity_profile()));
  }
  return spec;
}

DriftSpec make_tanh_single() {
  DriftSpec spec;
  spec.kind = TargetKind::Finite;
  spec.name = "tanh-single";
  spec.components.push_back(
      certified_component({1}, affine_tanh_profile(2.0, 1.0)));
  return spec;
}

DriftSpec make_tanh_window() {
  DriftSpec spec;
  spec.kind = TargetKind::Finite;
  spec.name = "tanh-window";
  spec.components.push_back(
      certified_component({1, 2}, affine_tanh_profile(2.0, 1.0)));
  return spec;
}

DriftSpec make_tanh_pair() {
  DriftSpec spec;
  spec.kind = TargetKind::Finite;
  spec.name = "tanh-pair";
  spec.components.push_back(
      certified_component({1, 2}, affine_tanh_profile(2.0, 1.0)));
  spec.components.push_back(certified_component({3}, affine_profile(3.0)));
  return spec;
}

DriftSpec make_log_perturbed(int n) {
  if (n < 1) throw std::invalid_argument("log-perturbed drift needs n >= 1");
  DriftSpec spec;
  spec.kind = TargetKind::Sequence;
  spec.name = "log-perturbed";
  for (int j = 1; j <= n; ++j) {
    spec.components.push_back(certified_component(
        {j}, log_perturbed_profile(0.25 / static_cast<double>(j), 0.5)));
  }
  return spec;
}

DriftSpec make_power_perturbed(int n) {
  if (n < 1) throw std::invalid_argument("power-perturbed drift needs n >= 1");
  DriftSpec spec;
  spec.kind = TargetKind::Sequence;
  spec.name = "power-perturbed";
  for (int j = 1; j <= n; ++j) {
    const double jj = static_cast<double>(j);
    spec.components.push_back(certified_component(
        {j}, power_perturbed_profile(0.5 / (jj * jj), 0.5, 1.0)));
  }
  return spec;
}

}  // namespace

const std::vector<CatalogEntry>& builtin_drifts() {
  static const std::vector<CatalogEntry> catalog = {
      {"identity", "coordinatewise identity, slope 1 everywhere",
       [](int n) { return make_identity_drift(n > 0 ? n : 256); }},
      {"tanh-single", "2x + tanh x on coordinate 1, slopes in (2,3]",
       [](int) { return make_tanh_single(); }},
      {"tanh-window", "2x + tanh x summed over coordinates {1,2}",
       [](int) { return make_tanh_window(); }},
      {"tanh-pair", "two disjoint components: 2x + tanh x on {1,2}, 3x on {3}",
       [](int) { return make_tanh_pair(); }},
      {"log-perturbed",
       "x + (0.25/j) G_log(x) per coordinate, smooth band at |x| near 1",
       [](int n) { return make_log_perturbed(n > 0 ? n : 256); }},
      {"power-perturbed",
       "2x + (0.5/j^2) G_pow(x) per coordinate, smooth band at |x| near 1",
       [](int n) { return make_power_perturbed(n > 0 ? n : 256); }},
  };
  return catalog;
}

DriftSpec make_builtin(const std::string& name, int n_components) {
  for (const auto& entry : builtin_drifts()) {
    if (entry.name == name) return entry.make(n_components);
  }
  throw std::invalid_argument("unknown builtin drift: " + name);
}

}  // namespace kolmo::drift
