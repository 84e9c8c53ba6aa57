#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kolmo/wiener.hpp"

namespace kolmo::drift {

struct SlopeRange {
  double lo = 0;
  double hi = 0;
};

// Scalar coordinate profile. A drift component evaluates as the sum of one
// profile applied to each of its coordinates, so the partial derivative in
// any owned coordinate is the profile slope at that coordinate's value.
class Profile {
 public:
  virtual ~Profile() = default;
  virtual double value(double x) const = 0;
  virtual double slope(double x) const = 0;
  // Exact global slope range where the profile family can certify one.
  virtual std::optional<SlopeRange> certified_slope_range() const {
    return std::nullopt;
  }
  // Amplitude of the perturbation part, for square-summability checks.
  virtual std::optional<double> perturbation_amplitude() const {
    return std::nullopt;
  }
  virtual std::string describe() const = 0;
};

using ProfilePtr = std::shared_ptr<const Profile>;

ProfilePtr identity_profile();
ProfilePtr affine_profile(double c);
// a x + b tanh(x) with b >= 0; slope range (a, a+b].
ProfilePtr affine_tanh_profile(double a, double b);
// x + amp * G(x) with G even: zero inside |x| < 1-eps, log|x| outside
// 1+eps, and a Hermite bridge (value and first derivative matched at the
// band edges) in between.
ProfilePtr log_perturbed_profile(double amp, double eps);
// 2x + amp * G(x) with G odd: zero inside, -x + x^{-p} outside (odd
// extension), bridged the same way. Requires p > 0.
ProfilePtr power_perturbed_profile(double amp, double eps, double p);
// User-supplied scalar function; slope by central differences with step
// 1e-5 (1 + |x|). Bounds, if any, must be declared on the component.
ProfilePtr custom_profile(std::string name, std::function<double(double)> fn);

struct DriftComponent {
  std::vector<int> indices;  // owned coordinates, 1-based, strictly increasing
  ProfilePtr profile;
  double m = 0;              // declared lower slope bound
  double M = 0;              // declared upper slope bound
  bool certified = false;    // bounds backed by the profile's exact range
  int zero_padded = 0;       // coordinates dropped by projection; each adds profile(0)
};

enum class TargetKind { Finite, Sequence };

struct DriftSpec {
  TargetKind kind = TargetKind::Finite;
  std::vector<DriftComponent> components;
  std::string name;

  int r() const { return static_cast<int>(components.size()); }
  int max_index() const;
};

// Component j (1-based) evaluated on a coefficient vector; coordinates past
// the end of w read as zero.
double component_value(const DriftSpec& spec, int j, std::span<const double> w);
std::function<double(std::span<const double>)> component_function(
    const DriftSpec& spec, int j);

// Builds a component with bounds taken from the profile certificate.
DriftComponent certified_component(std::vector<int> indices, ProfilePtr profile);
// Builds a component with caller-declared bounds (not certified).
DriftComponent declared_component(std::vector<int> indices, ProfilePtr profile,
                                  double m, double M);

// Structural hypotheses the bound constants depend on, named by shape:
//   Uniform           one component owning every ambient coordinate
//   UniformSubset     one component owning a subset, identity elsewhere absent
//   Cylinder          finitely many disjoint components, finite target
//   BasisCylinder     disjoint components through basis coefficients
//   CoefficientSequence  sequence target, one component per basis direction
enum class AssumptionMode {
  Uniform,
  UniformSubset,
  Cylinder,
  BasisCylinder,
  CoefficientSequence,
};

std::string to_string(AssumptionMode mode);
AssumptionMode assumption_mode_from_string(const std::string& s);

enum class ValidationVerdict { Pass, Fail, Inconclusive };
std::string to_string(ValidationVerdict v);

struct ComponentCheck {
  int component = 0;
  double declared_lo = 0, declared_hi = 0;
  double observed_lo = 0, observed_hi = 0;  // finite-difference probes
  bool certified = false;
  bool ok = false;
};

struct ValidationReport {
  AssumptionMode mode = AssumptionMode::Uniform;
  ValidationVerdict verdict = ValidationVerdict::Fail;
  std::vector<ComponentCheck> components;
  std::vector<std::string> notes;
  double coefficient_sq_sum = 0;  // sum of perturbation amplitudes squared
};

// Checks the structural shape for `mode`, the declared slope bounds against
// certificates and finite-difference probes, and (sequence mode) the
// square-summability of perturbation amplitudes. Distribution-level
// hypotheses that cannot be checked numerically are recorded as assumed in
// the notes rather than silently claimed.
ValidationReport validate_assumption(const DriftSpec& spec, AssumptionMode mode,
                                     int ambient_dim, int probe_count = 1000,
                                     std::uint64_t seed = 20260822);

// Shift of the position block (h, per coordinate) and of the integral block
// (k, per component). Lengths may be shorter than their targets; missing
// entries are zero.
struct DriftShift {
  std::vector<double> h;
  std::vector<double> k;
};

struct GeneralizedPath {
  wiener::PathGrid base;                      // position block: h + B
  std::vector<std::vector<double>> integral;  // [j][l]: k_j + trapezoid of F_j
  std::vector<double> shift_h, shift_k;
  bool low_resolution = false;  // grid too coarse for the integral to mean much
};

// Position h + B sampled exactly at the grid times; integral components by
// the trapezoid rule over grid values of F(h + B), started at k. Components
// must carry positive declared slope bounds (reject specs that have not been
// filled in enough to be used by the bound constants).
GeneralizedPath simulate_y(const DriftSpec& spec, const DriftShift* shift,
                           std::span<const double> times, int n_coords,
                           std::uint64_t seed, std::uint64_t replicate = 0);

// Final-time statistic loop used by Monte Carlo consumers: returns
// (position at T, integral block at T) without materializing the whole path.
void simulate_y_endpoint(const DriftSpec& spec, const DriftShift* shift,
                         std::span<const double> times, int n_coords,
                         std::uint64_t seed, std::uint64_t replicate,
                         std::span<double> out_p, std::span<double> out_xi);

// Composes the drift with coordinate projections: keeps component j when the
// output projection keeps j, clips owned coordinates to the input rank
// (dropped ones contribute profile(0) as a constant), and leaves declared
// bounds untouched.
DriftSpec project_drift(const DriftSpec& spec, int in_rank,
                        const wiener::Projection& out);

struct CatalogEntry {
  std::string name;
  std::string summary;
  // n is the number of components for sequence families; ignored otherwise.
  std::function<DriftSpec(int n)> make;
};

const std::vector<CatalogEntry>& builtin_drifts();
DriftSpec make_builtin(const std::string& name, int n_components = 0);

}  // namespace kolmo::drift
