#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace kolmo::registry {

// Bounded observable of a (position block, integral block) state.  Every
// entry carries certified range bounds: inf_bound <= f <= sup_bound on the
// whole state space, for any block lengths.  strictly_positive means f > 0
// pointwise even where the infimum is 0.
struct BoundedFunction {
  std::string name;
  bool strictly_positive = false;
  double inf_bound = 0.0;
  double sup_bound = 1.0;
  std::function<double(std::span<const double>, std::span<const double>)> eval;

  double operator()(std::span<const double> p,
                    std::span<const double> xi) const {
    return eval(p, xi);
  }
};

// The ten builtin observables.  All are functions of the symmetric
// invariants |p|^2, |xi|^2, sum(p)+sum(xi), sum(p)-sum(xi), so they are
// well defined in every dimension.
const std::vector<BoundedFunction>& all();

// Throws std::invalid_argument for an unknown name.
const BoundedFunction& find(const std::string& name);

// f^alpha with the range bounds raised accordingly.  Requires alpha > 0.
BoundedFunction power(const BoundedFunction& f, double alpha);

}  // namespace kolmo::registry
