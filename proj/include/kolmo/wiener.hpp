#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace kolmo::wiener {

// Coefficient model of the state space: finitely many basis coordinates are
// carried in memory, and a diagonal weight sequence decides the ambient norm.
// Coordinate indices are 1-based everywhere in this API, matching the usual
// basis-expansion notation; storage is 0-based internally.
struct Model {
  int truncation_dim = 256;
  std::vector<double> weights;  // weights[i-1] is the coefficient of e_i

  static Model with_default_weights(int n = 256);  // weight 1/i^2
  static Model with_weights(std::vector<double> w);
};

// Weighted l2 norm of a coefficient vector (padded with zeros past its end).
double w_norm(const Model& model, std::span<const double> coeffs);
// Plain l2 norm; the Cameron-Martin scale.
double h_norm(std::span<const double> coeffs);
// Coefficient pairing <x, e_i>, 1-based; zero past the materialized range.
double pairing(std::span<const double> coeffs, int i);
// Sum of weights with index > n, within the materialized range.
double tail_weight_sum(const Model& model, int n);

struct Projection {
  int rank = 0;                  // keep coordinates 1..rank when indices empty
  std::vector<int> indices;      // explicit 1-based index set (optional)

  bool keeps(int i) const;       // membership test, 1-based
  int max_index() const;
};

// One sampled trajectory: coords[i][l] is coordinate i+1 at times[l].
struct PathGrid {
  std::vector<double> times;
  std::vector<std::vector<double>> coords;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  int n_coords() const { return static_cast<int>(coords.size()); }
  int n_times() const { return static_cast<int>(times.size()); }
};

// Independent standard Brownian coordinates sampled exactly at the grid times
// (Gaussian increments, no discretization error at the nodes). The grid must
// start at 0 and increase strictly. Identical (seed, replicate, times,
// n_coords) give bitwise identical output.
PathGrid sample_brownian(std::span<const double> times, int n_coords,
                         std::uint64_t seed, std::uint64_t replicate = 0);

// Uniform grid helper: steps+1 times covering [0, T].
std::vector<double> uniform_grid(double T, int steps);

// Keeps the projected coordinates bitwise, zeroes the rest.
PathGrid project_path(const PathGrid& path, const Projection& proj);

// Trapezoid running integral of one coordinate: out[l] = integral to times[l].
std::vector<double> trapezoid_integral(std::span<const double> times,
                                       std::span<const double> values);

}  // namespace kolmo::wiener
