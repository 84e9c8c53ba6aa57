#include "kolmo/registry.hpp"

#include <cmath>
#include <stdexcept>

namespace kolmo::registry {

namespace {

struct Invariants {
  double s;  // |p|^2
  double u;  // |xi|^2
  double v;  // sum(p) + sum(xi)
  double w;  // sum(p) - sum(xi)
};

Invariants invariants(std::span<const double> p, std::span<const double> xi) {
  Invariants inv{0, 0, 0, 0};
  double sp = 0, sxi = 0;
  for (double x : p) {
    inv.s += x * x;
    sp += x;
  }
  for (double x : xi) {
    inv.u += x * x;
    sxi += x;
  }
  inv.v = sp + sxi;
  inv.w = sp - sxi;
  return inv;
}

using Raw = double (*)(const Invariants&);

BoundedFunction make(std::string name, bool strictly_positive, double inf_bound,
                     double sup_bound, Raw raw) {
  BoundedFunction f;
  f.name = std::move(name);
  f.strictly_positive = strictly_positive;
  f.inf_bound = inf_bound;
  f.sup_bound = sup_bound;
  f.eval = [raw](std::span<const double> p, std::span<const double> xi) {
    return raw(invariants(p, xi));
  };
  return f;
}

std::vector<BoundedFunction> build_all() {
  std::vector<BoundedFunction> fns;
  fns.push_back(make("unit", true, 1.0, 1.0,
                     [](const Invariants&) { return 1.0; }));
  fns.push_back(make("gauss_bell", true, 0.0, 1.0, [](const Invariants& i) {
    return std::exp(-(i.s + i.u) / 4.0);
  }));
  fns.push_back(make("rational_bell", true, 0.0, 1.0, [](const Invariants& i) {
    return 1.0 / (1.0 + i.s + i.u);
  }));
  // (2 + cos)/3 and (2 + sin)/3 stay inside [1/3, 1].
  fns.push_back(make("raised_cos", true, 1.0 / 3.0, 1.0,
                     [](const Invariants& i) {
                       return (2.0 + std::cos(i.v)) / 3.0;
                     }));
  fns.push_back(make("raised_sin", true, 1.0 / 3.0, 1.0,
                     [](const Invariants& i) {
                       return (2.0 + std::sin(i.w)) / 3.0;
                     }));
  fns.push_back(make("logistic", true, 0.0, 1.0, [](const Invariants& i) {
    return 1.0 / (1.0 + std::exp(-i.v));
  }));
  fns.push_back(make("sech_prod", true, 0.0, 1.0, [](const Invariants& i) {
    return 1.0 / std::cosh(i.v / 2.0);
  }));
  // (1 + s/2)/(1 + s + u) decreases in s at u = 0, so the supremum 1 sits
  // at the origin.
  fns.push_back(make("half_rational", true, 0.0, 1.0, [](const Invariants& i) {
    return (1.0 + 0.5 * i.s) / (1.0 + i.s + i.u);
  }));
  fns.push_back(make("gauss_offset", true, 0.0, 1.0, [](const Invariants& i) {
    const double ring = i.s - 1.0;
    return std::exp(-(ring * ring + i.u) / 4.0);
  }));
  // Vanishes at the origin; the one entry that is not strictly positive.
  fns.push_back(make("ring_well", false, 0.0, 1.0, [](const Invariants& i) {
    return (i.s + i.u) / (1.0 + i.s + i.u);
  }));
  return fns;
}

}  // namespace

const std::vector<BoundedFunction>& all() {
  static const std::vector<BoundedFunction> fns = build_all();
  return fns;
}

const BoundedFunction& find(const std::string& name) {
  for (const auto& f : all()) {
    if (f.name == name) return f;
  }
  throw std::invalid_argument("unknown test function: " + name);
}

BoundedFunction power(const BoundedFunction& f, double alpha) {
  if (!(alpha > 0)) {
    throw std::invalid_argument("power: alpha must be positive");
  }
  BoundedFunction g;
  g.name = f.name + "^" + std::to_string(alpha);
  g.strictly_positive = f.strictly_positive;
  g.inf_bound = std::pow(f.inf_bound, alpha);
  g.sup_bound = std::pow(f.sup_bound, alpha);
  auto base = f.eval;
  g.eval = [base, alpha](std::span<const double> p,
                         std::span<const double> xi) {
    return std::pow(base(p, xi), alpha);
  };
  return g;
}

}  // namespace kolmo::registry
