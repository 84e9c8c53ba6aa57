#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kolmo/drift.hpp"
#include "kolmo/kolmo_gauss.hpp"

namespace kolmo::bounds {

// Every bound is carried in log scale; the linear value is materialized only
// on demand. `parts` names the additive log contributions for reporting.
struct Bound {
  double log_value = 0;
  bool divergent = false;
  std::vector<std::pair<std::string, double>> parts;

  double value() const;
  // Linear columns print OVERFLOW beyond this point.
  bool overflows() const;
};

// Control distance of the degenerate-direction geometry on R^d x R:
//   d^2 = (1/beta) (alpha sum_i (p'_i - p_i) + xi' - xi)^2 + |p' - p|^2.
// alpha >= 0, beta > 0.
double control_distance(double alpha, double beta, std::span<const double> p,
                        double xi, std::span<const double> p2, double xi2);

// Quadratic gradient forms on functions of (p, xi), xi scalar:
//   Gamma^{alpha,beta}(f) = sum_i (d_{p_i} f - alpha d_xi f)^2 + beta (d_xi f)^2.
struct GammaForm {
  double alpha = 0;
  double beta = 1;
};

using Func = std::function<double(std::span<const double>, double)>;
using DriftFunc = std::function<double(std::span<const double>)>;

// Richardson-extrapolated central differences, base step 1e-3 (1 + |coord|).
double gamma_eval(const GammaForm& form, const Func& f,
                  std::span<const double> p, double xi);
double gamma_cross_eval(const GammaForm& form, const Func& f, const Func& g,
                        std::span<const double> p, double xi);

// Iterated form Gamma_2 = (1/2) L Gamma(f) - Gamma(f, Lf) for the generator
// L = (1/2) Laplacian_p + F(p) d_xi. Nested finite differences; accurate to
// about 1e-4 absolute for smooth f.
double gamma2_eval(const GammaForm& form, const Func& f, const DriftFunc& F,
                   std::span<const double> p, double xi);

// Dimension-independent constant of the position/integral pair: the distance
// term is  |dp|^2/t + |dxi|^2/t^3  scaled by 3/(4 - sqrt 13) * alpha/(alpha-1).
Bound wang_constant_kolmogorov(double alpha, double t, const gauss::State& x,
                               const gauss::State& y);

// Same geometry, integrated form: 3(1+q)/(4 - sqrt 13) * (|p|^2/t + |xi|^2/t^3).
Bound harnack_integral_kolmogorov(double q, double t, std::span<const double> p,
                                  std::span<const double> xi);

// Drift-dependent constants. The shape of the constant follows the validated
// structural mode:
//   Uniform        single window over all coordinates, scalar target
//   UniformSubset  window plus a Gaussian factor on the complement
//   Cylinder/BasisCylinder  product over components plus the complement factor
// x, y carry a position block of length >= max owned coordinate and an
// integral block of length r.
struct DriftState {
  std::vector<double> p;
  std::vector<double> xi;  // one entry per drift component
};

Bound wang_constant_drift(double alpha, double t, const DriftState& x,
                          const DriftState& y, const drift::DriftSpec& spec,
                          drift::AssumptionMode mode);

Bound harnack_integral_drift(double q, double t, const DriftState& x,
                             const drift::DriftSpec& spec,
                             drift::AssumptionMode mode);

// Families of upper bounds for the L^q norm of the shifted-law density ratio,
// named by their structure:
//   Hypoelliptic     3(1+q)/(4 - sqrt 13) (|h|^2/t + |k|^2/t^3)
//   CylinderProduct  product of per-component window factors (needs a spec)
//   SequenceProduct  the same over a sequence drift; diverges when the
//                    log-sum grows past the overflow budget
//   IdentityProfile  (1+q)(|h|^2/t + 3<h,k>/t^2 + 3|k|^2/t^3)
//   ExactGaussian    2(q-1)(|h|^2/t + 3<h,k>/t^2 + 3|k|^2/t^3), the exact value
enum class RnStyle {
  Hypoelliptic,
  CylinderProduct,
  SequenceProduct,
  IdentityProfile,
  ExactGaussian,
};

std::string to_string(RnStyle style);
RnStyle rn_style_from_string(const std::string& s);

// Shift for the drift-dependent styles: h per coordinate, k per component.
Bound rn_bound(RnStyle style, double q, double t, const gauss::Shift& shift,
               const drift::DriftSpec* spec = nullptr);
Bound rn_bound_drift(RnStyle style, double q, double t,
                     std::span<const double> h, std::span<const double> k,
                     const drift::DriftSpec& spec);

// Quadratic-drift change of measure for the shifted pair: the shift direction
// gamma(s) = s a + s^2 b is chosen so that gamma(t) = -h and
// int_0^t gamma = -(t h + k); then
//   a = -4h/t - 6k/t^2,  b = 3h/t^2 + 6k/t^3,
//   |gamma|^2_{H_t} = 4|h|^2/t + 12<h,k>/t^2 + 12|k|^2/t^3.
struct GirsanovShift {
  std::vector<double> a;
  std::vector<double> b;
  double gamma_norm_sq = 0;
  double t = 0;
};

GirsanovShift girsanov_coefficients(double t, const gauss::Shift& shift);

// gamma evaluated at time s and its running integral, for endpoint checks.
std::vector<double> girsanov_gamma_at(const GirsanovShift& g, double s);
std::vector<double> girsanov_gamma_integral(const GirsanovShift& g, double s);

// log density of the tilted measure along one path, reduced to the endpoint
// statistics:  <a, B_t> + 2 <b, t B_t - int_0^t B ds> - |gamma|^2 / 2.
double girsanov_log_density(const GirsanovShift& g,
                            std::span<const double> b_end,
                            std::span<const double> b_integral);

// Same quantity by the discretized stochastic integral
// sum_l <gamma'(s_l), B_{l+1} - B_l> - |gamma|^2/2; agreement with the
// endpoint route is O(grid step) per path.
double girsanov_log_density_discretized(const GirsanovShift& g,
                                        const wiener::PathGrid& path);

}  // namespace kolmo::bounds
