#include "kolmo/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kolmo::bounds {

namespace {

// 4 - sqrt(13); the sharpest constant available for the position/integral
// pair's gradient bound enters every dimension-independent estimate through
// its reciprocal.
const double kFourMinusSqrt13 = 4.0 - std::sqrt(13.0);
constexpr double kLogOverflow = 700.0;
constexpr double kDivergenceBudget = 1e6;

void check_alpha(double alpha) {
  if (!(alpha > 1)) {
    throw std::invalid_argument("alpha must exceed 1");
  }
}

void check_q(double q) {
  if (!(q > 1)) {
    throw std::invalid_argument("q must exceed 1");
  }
}

double sq(double x) { return x * x; }

}  // namespace

double Bound::value() const {
  if (divergent) return std::numeric_limits<double>::infinity();
  return std::exp(log_value);
}

bool Bound::overflows() const {
  return divergent || std::abs(log_value) > kLogOverflow;
}

double control_distance(double alpha, double beta, std::span<const double> p,
                        double xi, std::span<const double> p2, double xi2) {
  if (!(alpha >= 0)) throw std::invalid_argument("control_distance: alpha < 0");
  if (!(beta > 0)) throw std::invalid_argument("control_distance: beta <= 0");
  if (p.size() != p2.size()) {
    throw std::invalid_argument("control_distance: dimension mismatch");
  }
  double dp_sum = 0;
  double dp_sq = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p2[i] - p[i];
    dp_sum += d;
    dp_sq += d * d;
  }
  const double mixed = alpha * dp_sum + (xi2 - xi);
  return std::sqrt(mixed * mixed / beta + dp_sq);
}

namespace {

// Richardson-extrapolated central difference in one coordinate of (p, xi).
// coord = -1 means the xi direction.
double partial(const Func& f, std::span<const double> p, double xi, int coord) {
  std::vector<double> work(p.begin(), p.end());
  const double base =
      (coord < 0) ? xi : work[static_cast<std::size_t>(coord)];
  const double h = 1e-3 * (1.0 + std::abs(base));
  auto eval = [&](double step) {
    if (coord < 0) return f(work, xi + step);
    work[static_cast<std::size_t>(coord)] = base + step;
    const double v = f(work, xi);
    work[static_cast<std::size_t>(coord)] = base;
    return v;
  };
  const double d1 = (eval(h) - eval(-h)) / (2.0 * h);
  const double d2 = (eval(0.5 * h) - eval(-0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

double second_partial(const Func& f, std::span<const double> p, double xi,
                      int coord) {
  std::vector<double> work(p.begin(), p.end());
  const double base =
      (coord < 0) ? xi : work[static_cast<std::size_t>(coord)];
  const double h = 1e-3 * (1.0 + std::abs(base));
  auto eval = [&](double step) {
    if (coord < 0) return f(work, xi + step);
    work[static_cast<std::size_t>(coord)] = base + step;
    const double v = f(work, xi);
    work[static_cast<std::size_t>(coord)] = base;
    return v;
  };
  const double f0 = eval(0.0);
  const double d1 = (eval(h) - 2.0 * f0 + eval(-h)) / (h * h);
  const double d2 = (eval(0.5 * h) - 2.0 * f0 + eval(-0.5 * h)) / (0.25 * h * h);
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace

double gamma_eval(const GammaForm& form, const Func& f,
                  std::span<const double> p, double xi) {
  if (!(form.beta >= 0)) throw std::invalid_argument("gamma form: beta < 0");
  const double fxi = partial(f, p, xi, -1);
  double acc = form.beta * fxi * fxi;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double fpi = partial(f, p, xi, static_cast<int>(i));
    acc += sq(fpi - form.alpha * fxi);
  }
  return acc;
}

double gamma_cross_eval(const GammaForm& form, const Func& f, const Func& g,
                        std::span<const double> p, double xi) {
  const double fxi = partial(f, p, xi, -1);
  const double gxi = partial(g, p, xi, -1);
  double acc = form.beta * fxi * gxi;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double fpi = partial(f, p, xi, static_cast<int>(i));
    const double gpi = partial(g, p, xi, static_cast<int>(i));
    acc += (fpi - form.alpha * fxi) * (gpi - form.alpha * gxi);
  }
  return acc;
}

double gamma2_eval(const GammaForm& form, const Func& f, const DriftFunc& F,
                   std::span<const double> p, double xi) {
  if (!F) throw std::invalid_argument("gamma2_eval: drift function required");
  // L g = (1/2) sum_i d^2_{p_i} g + F(p) d_xi g.
  auto apply_L = [&F](const Func& g) {
    return Func([&F, g](std::span<const double> pp, double xx) {
      double acc = 0;
      for (std::size_t i = 0; i < pp.size(); ++i) {
        acc += 0.5 * second_partial(g, pp, xx, static_cast<int>(i));
      }
      acc += F(pp) * partial(g, pp, xx, -1);
      return acc;
    });
  };
  const Func Lf = apply_L(f);
  const Func gamma_f([form, f](std::span<const double> pp, double xx) {
    return gamma_eval(form, f, pp, xx);
  });
  const Func L_gamma_f = apply_L(gamma_f);
  return 0.5 * L_gamma_f(p, xi) - gamma_cross_eval(form, f, Lf, p, xi);
}

Bound wang_constant_kolmogorov(double alpha, double t, const gauss::State& x,
                               const gauss::State& y) {
  check_alpha(alpha);
  if (!(t > 0)) throw std::invalid_argument("wang constant: t <= 0");
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("wang constant: dimension mismatch");
  }
  double dp2 = 0, dxi2 = 0;
  for (int i = 0; i < x.dim(); ++i) {
    dp2 += sq(y.p[static_cast<std::size_t>(i)] - x.p[static_cast<std::size_t>(i)]);
    dxi2 +=
        sq(y.xi[static_cast<std::size_t>(i)] - x.xi[static_cast<std::size_t>(i)]);
  }
  const double factor = (3.0 / kFourMinusSqrt13) * alpha / (alpha - 1.0);
  Bound b;
  b.parts.emplace_back("position", factor * dp2 / t);
  b.parts.emplace_back("integral", factor * dxi2 / (t * t * t));
  b.log_value = b.parts[0].second + b.parts[1].second;
  return b;
}

Bound harnack_integral_kolmogorov(double q, double t, std::span<const double> p,
                                  std::span<const double> xi) {
  check_q(q);
  if (!(t > 0)) throw std::invalid_argument("harnack integral: t <= 0");
  if (p.size() != xi.size()) {
    throw std::invalid_argument("harnack integral: dimension mismatch");
  }
  double p2 = 0, xi2 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p2 += sq(p[i]);
    xi2 += sq(xi[i]);
  }
  const double factor = 3.0 * (1.0 + q) / kFourMinusSqrt13;
  Bound b;
  b.parts.emplace_back("position", factor * p2 / t);
  b.parts.emplace_back("integral", factor * xi2 / (t * t * t));
  b.log_value = b.parts[0].second + b.parts[1].second;
  return b;
}

namespace {

struct DeltaBlocks {
  std::vector<double> dp;   // per coordinate
  std::vector<double> dxi;  // per component
};

DeltaBlocks delta_blocks(const DriftState& x, const DriftState& y,
                         const drift::DriftSpec& spec) {
  if (x.p.size() != y.p.size() || x.xi.size() != y.xi.size()) {
    throw std::invalid_argument("drift constant: state dimension mismatch");
  }
  if (x.xi.size() != static_cast<std::size_t>(spec.r())) {
    throw std::invalid_argument(
        "drift constant: integral block must match component count");
  }
  if (spec.max_index() > static_cast<int>(x.p.size())) {
    throw std::invalid_argument(
        "drift constant: position block shorter than owned coordinates");
  }
  DeltaBlocks d;
  d.dp.resize(x.p.size());
  for (std::size_t i = 0; i < x.p.size(); ++i) d.dp[i] = y.p[i] - x.p[i];
  d.dxi.resize(x.xi.size());
  for (std::size_t i = 0; i < x.xi.size(); ++i) d.dxi[i] = y.xi[i] - x.xi[i];
  return d;
}

// Window factor of one component:
//   3 a M / (m^3 c t^3) ((m t / 2) sum_I dp + dxi)^2 + a M / (4 m c t) |dp|_I^2
// with (a, c) = (alpha, alpha-1) for the semigroup form and (1+q, 1) for the
// integrated form.
double component_log_factor(const drift::DriftComponent& comp, double a,
                            double c, double t, std::span<const double> dp,
                            double dxi) {
  const double m = comp.m;
  const double M = comp.M;
  double window_sum = 0;
  double window_sq = 0;
  for (int i : comp.indices) {
    const double v = dp[static_cast<std::size_t>(i - 1)];
    window_sum += v;
    window_sq += v * v;
  }
  const double mixed = 0.5 * m * t * window_sum + dxi;
  return 3.0 * a * M / (m * m * m * c * t * t * t) * mixed * mixed +
         a * M / (4.0 * m * c * t) * window_sq;
}

double complement_log_factor(const drift::DriftSpec& spec, double a, double c,
                             double t, std::span<const double> dp) {
  std::vector<char> owned(dp.size(), 0);
  for (const auto& comp : spec.components) {
    for (int i : comp.indices) owned[static_cast<std::size_t>(i - 1)] = 1;
  }
  double acc = 0;
  for (std::size_t i = 0; i < dp.size(); ++i) {
    if (!owned[i]) acc += dp[i] * dp[i];
  }
  return a / (4.0 * c * t) * acc;
}

void check_drift_bounds(const drift::DriftSpec& spec) {
  for (const auto& comp : spec.components) {
    if (!(comp.m > 0) || !(comp.M >= comp.m)) {
      throw std::invalid_argument(
          "drift constant: components need certified 0 < m <= M");
    }
  }
}

}  // namespace

Bound wang_constant_drift(double alpha, double t, const DriftState& x,
                          const DriftState& y, const drift::DriftSpec& spec,
                          drift::AssumptionMode mode) {
  check_alpha(alpha);
  if (!(t > 0)) throw std::invalid_argument("wang constant: t <= 0");
  check_drift_bounds(spec);
  const DeltaBlocks d = delta_blocks(x, y, spec);
  Bound b;
  const double c = alpha - 1.0;

  if (mode == drift::AssumptionMode::Uniform) {
    // Single window over every coordinate, written in its own display:
    // a M/(4 m c t) [ 12/(m t)^2 ((m t/2) sum dp + dxi)^2 + |dp|^2 ].
    if (spec.r() != 1) {
      throw std::invalid_argument("uniform constant needs a single component");
    }
    const auto& comp = spec.components[0];
    if (static_cast<int>(comp.indices.size()) != static_cast<int>(d.dp.size())) {
      throw std::invalid_argument(
          "uniform constant: component must own every coordinate");
    }
    const double m = comp.m;
    const double M = comp.M;
    double dp_sum = 0, dp_sq = 0;
    for (double v : d.dp) {
      dp_sum += v;
      dp_sq += v * v;
    }
    const double mixed = 0.5 * m * t * dp_sum + d.dxi[0];
    const double lead = alpha * M / (4.0 * m * c * t);
    b.parts.emplace_back(
        "window", lead * (12.0 / (m * m * t * t) * mixed * mixed + dp_sq));
    b.log_value = b.parts[0].second;
    return b;
  }

  double total = 0;
  for (int j = 1; j <= spec.r(); ++j) {
    const auto& comp = spec.components[static_cast<std::size_t>(j - 1)];
    const double lf = component_log_factor(comp, alpha, c, t, d.dp,
                                           d.dxi[static_cast<std::size_t>(j - 1)]);
    b.parts.emplace_back("component_" + std::to_string(j), lf);
    total += lf;
  }
  const double comp_factor = complement_log_factor(spec, alpha, c, t, d.dp);
  b.parts.emplace_back("complement", comp_factor);
  total += comp_factor;
  b.log_value = total;
  return b;
}

Bound harnack_integral_drift(double q, double t, const DriftState& x,
                             const drift::DriftSpec& spec,
                             drift::AssumptionMode) {
  check_q(q);
  if (!(t > 0)) throw std::invalid_argument("harnack integral: t <= 0");
  check_drift_bounds(spec);
  if (x.xi.size() != static_cast<std::size_t>(spec.r())) {
    throw std::invalid_argument(
        "harnack integral: integral block must match component count");
  }
  if (spec.max_index() > static_cast<int>(x.p.size())) {
    throw std::invalid_argument(
        "harnack integral: position block shorter than owned coordinates");
  }
  Bound b;
  double total = 0;
  for (int j = 1; j <= spec.r(); ++j) {
    const auto& comp = spec.components[static_cast<std::size_t>(j - 1)];
    const double lf =
        component_log_factor(comp, 1.0 + q, 1.0, t, x.p,
                             x.xi[static_cast<std::size_t>(j - 1)]);
    b.parts.emplace_back("component_" + std::to_string(j), lf);
    total += lf;
  }
  const double comp_factor = complement_log_factor(spec, 1.0 + q, 1.0, t, x.p);
  b.parts.emplace_back("complement", comp_factor);
  total += comp_factor;
  b.log_value = total;
  return b;
}

std::string to_string(RnStyle style) {
  switch (style) {
    case RnStyle::Hypoelliptic: return "hypoelliptic";
    case RnStyle::CylinderProduct: return "cylinder";
    case RnStyle::SequenceProduct: return "sequence";
    case RnStyle::IdentityProfile: return "identity";
    case RnStyle::ExactGaussian: return "exact";
  }
  return "?";
}

RnStyle rn_style_from_string(const std::string& s) {
  if (s == "hypoelliptic") return RnStyle::Hypoelliptic;
  if (s == "cylinder") return RnStyle::CylinderProduct;
  if (s == "sequence") return RnStyle::SequenceProduct;
  if (s == "identity") return RnStyle::IdentityProfile;
  if (s == "exact") return RnStyle::ExactGaussian;
  throw std::invalid_argument("unknown density-ratio bound style: " + s);
}

namespace {

Bound shift_quadratic_bound(double coeff, double t, const gauss::Shift& shift) {
  double h2 = 0, hk = 0, k2 = 0;
  for (int i = 0; i < shift.dim(); ++i) {
    h2 += sq(shift.h[static_cast<std::size_t>(i)]);
    hk += shift.h[static_cast<std::size_t>(i)] *
          shift.k[static_cast<std::size_t>(i)];
    k2 += sq(shift.k[static_cast<std::size_t>(i)]);
  }
  Bound b;
  b.parts.emplace_back("position", coeff * h2 / t);
  b.parts.emplace_back("mixed", coeff * 3.0 * hk / (t * t));
  b.parts.emplace_back("integral", coeff * 3.0 * k2 / (t * t * t));
  b.log_value =
      b.parts[0].second + b.parts[1].second + b.parts[2].second;
  return b;
}

}  // namespace

Bound rn_bound(RnStyle style, double q, double t, const gauss::Shift& shift,
               const drift::DriftSpec* spec) {
  check_q(q);
  if (!(t > 0)) throw std::invalid_argument("rn_bound: t <= 0");
  switch (style) {
    case RnStyle::Hypoelliptic: {
      double h2 = 0, k2 = 0;
      for (int i = 0; i < shift.dim(); ++i) {
        h2 += sq(shift.h[static_cast<std::size_t>(i)]);
        k2 += sq(shift.k[static_cast<std::size_t>(i)]);
      }
      const double factor = 3.0 * (1.0 + q) / kFourMinusSqrt13;
      Bound b;
      b.parts.emplace_back("position", factor * h2 / t);
      b.parts.emplace_back("integral", factor * k2 / (t * t * t));
      b.log_value = b.parts[0].second + b.parts[1].second;
      return b;
    }
    case RnStyle::IdentityProfile:
      return shift_quadratic_bound(1.0 + q, t, shift);
    case RnStyle::ExactGaussian:
      return shift_quadratic_bound(2.0 * (q - 1.0), t, shift);
    case RnStyle::CylinderProduct:
    case RnStyle::SequenceProduct:
      if (!spec) {
        throw std::invalid_argument(
            "rn_bound: component-product styles need a drift spec");
      }
      return rn_bound_drift(style, q, t, shift.h, shift.k, *spec);
  }
  throw std::logic_error("rn_bound: unhandled style");
}

Bound rn_bound_drift(RnStyle style, double q, double t,
                     std::span<const double> h, std::span<const double> k,
                     const drift::DriftSpec& spec) {
  check_q(q);
  if (!(t > 0)) throw std::invalid_argument("rn_bound: t <= 0");
  check_drift_bounds(spec);
  if (style == RnStyle::SequenceProduct &&
      spec.kind != drift::TargetKind::Sequence) {
    throw std::invalid_argument(
        "rn_bound: sequence style needs a sequence-valued drift");
  }
  if (k.size() > static_cast<std::size_t>(spec.r())) {
    throw std::invalid_argument(
        "rn_bound: shift has more integral entries than drift components");
  }
  if (spec.max_index() < static_cast<int>(h.size())) {
    // Position shift support must be owned or explicitly in the complement;
    // unowned coordinates are allowed, they feed the Gaussian factor.
  }
  Bound b;
  double total = 0;
  for (int j = 1; j <= spec.r(); ++j) {
    const auto& comp = spec.components[static_cast<std::size_t>(j - 1)];
    // Components past the shift support contribute a unit factor exactly.
    bool touched = static_cast<std::size_t>(j) <= k.size() &&
                   k[static_cast<std::size_t>(j - 1)] != 0.0;
    if (!touched) {
      for (int i : comp.indices) {
        if (static_cast<std::size_t>(i) <= h.size() &&
            h[static_cast<std::size_t>(i - 1)] != 0.0) {
          touched = true;
          break;
        }
      }
    }
    if (!touched) continue;
    double window_sum = 0, window_sq = 0;
    for (int i : comp.indices) {
      const double v = (static_cast<std::size_t>(i) <= h.size())
                           ? h[static_cast<std::size_t>(i - 1)]
                           : 0.0;
      window_sum += v;
      window_sq += v * v;
    }
    const double kj = (static_cast<std::size_t>(j) <= k.size())
                          ? k[static_cast<std::size_t>(j - 1)]
                          : 0.0;
    const double m = comp.m;
    const double M = comp.M;
    const double mixed = 0.5 * m * t * window_sum + kj;
    const double lf =
        3.0 * (1.0 + q) * M / (m * m * m * t * t * t) * mixed * mixed +
        (1.0 + q) * M / (4.0 * m * t) * window_sq;
    b.parts.emplace_back("component_" + std::to_string(j), lf);
    total += lf;
    if (total > kDivergenceBudget) {
      b.divergent = true;
      b.log_value = total;
      b.parts.emplace_back("divergence_budget", kDivergenceBudget);
      return b;
    }
  }
  // Complement factor over position coordinates owned by no component.
  std::vector<char> owned(h.size(), 0);
  for (const auto& comp : spec.components) {
    for (int i : comp.indices) {
      if (static_cast<std::size_t>(i) <= h.size()) {
        owned[static_cast<std::size_t>(i - 1)] = 1;
      }
    }
  }
  double comp_sq = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!owned[i]) comp_sq += h[i] * h[i];
  }
  const double comp_factor = (1.0 + q) / (4.0 * t) * comp_sq;
  b.parts.emplace_back("complement", comp_factor);
  total += comp_factor;
  b.log_value = total;
  return b;
}

GirsanovShift girsanov_coefficients(double t, const gauss::Shift& shift) {
  if (!(t > 0)) throw std::invalid_argument("girsanov: t <= 0");
  if (shift.h.size() != shift.k.size()) {
    throw std::invalid_argument("girsanov: shift blocks must match");
  }
  GirsanovShift g;
  g.t = t;
  const int d = shift.dim();
  g.a.resize(static_cast<std::size_t>(d));
  g.b.resize(static_cast<std::size_t>(d));
  double h2 = 0, hk = 0, k2 = 0;
  for (int i = 0; i < d; ++i) {
    const double h = shift.h[static_cast<std::size_t>(i)];
    const double k = shift.k[static_cast<std::size_t>(i)];
    g.a[static_cast<std::size_t>(i)] = -4.0 * h / t - 6.0 * k / (t * t);
    g.b[static_cast<std::size_t>(i)] =
        3.0 * h / (t * t) + 6.0 * k / (t * t * t);
    h2 += h * h;
    hk += h * k;
    k2 += k * k;
  }
  g.gamma_norm_sq =
      4.0 * h2 / t + 12.0 * hk / (t * t) + 12.0 * k2 / (t * t * t);
  return g;
}

std::vector<double> girsanov_gamma_at(const GirsanovShift& g, double s) {
  std::vector<double> out(g.a.size());
  for (std::size_t i = 0; i < g.a.size(); ++i) {
    out[i] = s * g.a[i] + s * s * g.b[i];
  }
  return out;
}

std::vector<double> girsanov_gamma_integral(const GirsanovShift& g, double s) {
  std::vector<double> out(g.a.size());
  for (std::size_t i = 0; i < g.a.size(); ++i) {
    out[i] = 0.5 * s * s * g.a[i] + s * s * s * g.b[i] / 3.0;
  }
  return out;
}

double girsanov_log_density(const GirsanovShift& g,
                            std::span<const double> b_end,
                            std::span<const double> b_integral) {
  if (b_end.size() != g.a.size() || b_integral.size() != g.a.size()) {
    throw std::invalid_argument("girsanov density: dimension mismatch");
  }
  double acc = 0;
  for (std::size_t i = 0; i < g.a.size(); ++i) {
    acc += g.a[i] * b_end[i] +
           2.0 * g.b[i] * (g.t * b_end[i] - b_integral[i]);
  }
  return acc - 0.5 * g.gamma_norm_sq;
}

double girsanov_log_density_discretized(const GirsanovShift& g,
                                        const wiener::PathGrid& path) {
  if (path.n_coords() != static_cast<int>(g.a.size())) {
    throw std::invalid_argument("girsanov density: coordinate mismatch");
  }
  if (std::abs(path.times.back() - g.t) > 1e-12 * (1.0 + g.t)) {
    throw std::invalid_argument("girsanov density: path must end at time t");
  }
  double acc = 0;
  for (std::size_t i = 0; i < g.a.size(); ++i) {
    const auto& col = path.coords[i];
    for (std::size_t l = 0; l + 1 < path.times.size(); ++l) {
      const double s = path.times[l];
      const double rate = g.a[i] + 2.0 * s * g.b[i];
      acc += rate * (col[l + 1] - col[l]);
    }
  }
  return acc - 0.5 * g.gamma_norm_sq;
}

}  // namespace kolmo::bounds
