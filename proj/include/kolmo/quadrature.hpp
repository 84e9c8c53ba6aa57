#pragma once

#include <functional>

namespace kolmo::quad {

struct Result {
  double value = 0;
  double abs_error = 0;  // accumulated local error estimates
  long evals = 0;
  bool converged = true;
};

// Adaptive bisection on [a, b]; each interval is judged by the difference of
// 15- and 31-point Gauss-Legendre rules. Absolute tolerance only: callers
// scale it to the expected magnitude of the integral.
Result integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_intervals = 4000);

// Iterated integral over the box [ax,bx] x [ay,by]. The inner integral runs
// at a tolerance small against the outer one.
Result integrate2(const std::function<double(double, double)>& f, double ax,
                  double bx, double ay, double by, double abs_tol,
                  int max_intervals = 4000);

}  // namespace kolmo::quad
