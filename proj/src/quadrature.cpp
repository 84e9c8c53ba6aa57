#include "kolmo/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <vector>

namespace kolmo::quad {

namespace {

struct Rule {
  std::vector<double> nodes;    // on (-1, 1)
  std::vector<double> weights;
};

// Gauss-Legendre nodes as roots of P_n by Newton iteration from the Chebyshev
// initial guess; weights 2 / ((1 - x^2) P_n'(x)^2). Machine precision for the
// small n used here.
Rule legendre_rule(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      // Recurrence for P_n(x) and P_n'(x).
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // One clean evaluation of the derivative at the converged root.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const Rule& rule15() {
  static const Rule r = legendre_rule(15);
  return r;
}

const Rule& rule31() {
  static const Rule r = legendre_rule(31);
  return r;
}

double apply(const Rule& rule, const std::function<double(double)>& f,
             double a, double b, long& evals) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  evals += static_cast<long>(rule.nodes.size());
  return acc * half;
}

struct Segment {
  double a, b;
  double value;   // 31-point estimate
  double error;   // |31-point - 15-point|
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment make_segment(const std::function<double(double)>& f, double a,
                     double b, long& evals) {
  Segment s;
  s.a = a;
  s.b = b;
  const double coarse = apply(rule15(), f, a, b, evals);
  s.value = apply(rule31(), f, a, b, evals);
  s.error = std::abs(s.value - coarse);
  return s;
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_intervals) {
  if (!(b > a)) throw std::invalid_argument("integrate: empty interval");
  if (!(abs_tol > 0)) throw std::invalid_argument("integrate: bad tolerance");
  Result out;
  std::priority_queue<Segment> queue;
  queue.push(make_segment(f, a, b, out.evals));
  int intervals = 1;
  double total_value = queue.top().value;
  double total_error = queue.top().error;
  while (total_error > abs_tol && intervals < max_intervals) {
    Segment worst = queue.top();
    queue.pop();
    total_value -= worst.value;
    total_error -= worst.error;
    const double mid = 0.5 * (worst.a + worst.b);
    Segment left = make_segment(f, worst.a, mid, out.evals);
    Segment right = make_segment(f, mid, worst.b, out.evals);
    total_value += left.value + right.value;
    total_error += left.error + right.error;
    queue.push(left);
    queue.push(right);
    intervals += 1;
  }
  out.value = total_value;
  out.abs_error = total_error;
  out.converged = total_error <= abs_tol;
  return out;
}

Result integrate2(const std::function<double(double, double)>& f, double ax,
                  double bx, double ay, double by, double abs_tol,
                  int max_intervals) {
  Result out;
  long inner_evals = 0;
  bool inner_ok = true;
  const double inner_tol = abs_tol / (4.0 * (bx - ax));
  auto outer = [&](double x) {
    Result r = integrate([&](double y) { return f(x, y); }, ay, by, inner_tol,
                         max_intervals);
    inner_evals += r.evals;
    inner_ok = inner_ok && r.converged;
    return r.value;
  };
  Result r = integrate(outer, ax, bx, abs_tol * 0.5, max_intervals);
  out.value = r.value;
  out.abs_error = r.abs_error + inner_tol * (bx - ax);
  out.evals = r.evals + inner_evals;
  out.converged = r.converged && inner_ok;
  return out;
}

}  // namespace kolmo::quad
