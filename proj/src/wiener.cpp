#include "kolmo/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kolmo/rng.hpp"

namespace kolmo::wiener {

Model Model::with_default_weights(int n) {
  if (n <= 0) throw std::invalid_argument("Model: dimension must be positive");
  Model m;
  m.truncation_dim = n;
  m.weights.resize(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    m.weights[static_cast<std::size_t>(i - 1)] =
        1.0 / (static_cast<double>(i) * static_cast<double>(i));
  }
  return m;
}

Model Model::with_weights(std::vector<double> w) {
  if (w.empty()) throw std::invalid_argument("Model: empty weight sequence");
  for (double v : w) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw std::invalid_argument("Model: weights must be positive finite");
    }
  }
  Model m;
  m.truncation_dim = static_cast<int>(w.size());
  m.weights = std::move(w);
  return m;
}

double w_norm(const Model& model, std::span<const double> coeffs) {
  if (coeffs.size() > model.weights.size()) {
    throw std::invalid_argument("w_norm: vector exceeds model dimension");
  }
  double acc = 0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    acc += model.weights[i] * coeffs[i] * coeffs[i];
  }
  return std::sqrt(acc);
}

double h_norm(std::span<const double> coeffs) {
  double acc = 0;
  for (double v : coeffs) acc += v * v;
  return std::sqrt(acc);
}

double pairing(std::span<const double> coeffs, int i) {
  if (i < 1) throw std::invalid_argument("pairing: index is 1-based");
  if (static_cast<std::size_t>(i) > coeffs.size()) return 0.0;
  return coeffs[static_cast<std::size_t>(i - 1)];
}

double tail_weight_sum(const Model& model, int n) {
  if (n < 0) throw std::invalid_argument("tail_weight_sum: negative rank");
  double acc = 0;
  for (int i = model.truncation_dim; i > n; --i) {
    acc += model.weights[static_cast<std::size_t>(i - 1)];
  }
  return acc;
}

bool Projection::keeps(int i) const {
  if (indices.empty()) return i >= 1 && i <= rank;
  return std::find(indices.begin(), indices.end(), i) != indices.end();
}

int Projection::max_index() const {
  if (indices.empty()) return rank;
  return *std::max_element(indices.begin(), indices.end());
}

namespace {

void check_grid(std::span<const double> times) {
  if (times.size() < 2) {
    throw std::invalid_argument("grid must contain at least two times");
  }
  if (times[0] != 0.0) {
    throw std::invalid_argument("grid must start at time 0");
  }
  for (std::size_t l = 1; l < times.size(); ++l) {
    if (!(times[l] > times[l - 1])) {
      throw std::invalid_argument("grid times must increase strictly");
    }
  }
}

}  // namespace

PathGrid sample_brownian(std::span<const double> times, int n_coords,
                         std::uint64_t seed, std::uint64_t replicate) {
  check_grid(times);
  if (n_coords <= 0) {
    throw std::invalid_argument("sample_brownian: need at least one coordinate");
  }
  PathGrid path;
  path.times.assign(times.begin(), times.end());
  path.seed = seed;
  path.replicate = replicate;
  path.coords.resize(static_cast<std::size_t>(n_coords));
  for (int i = 0; i < n_coords; ++i) {
    rng::NormalStream stream(seed, rng::StreamKind::BrownianIncrement,
                             static_cast<std::uint64_t>(i), replicate);
    auto& col = path.coords[static_cast<std::size_t>(i)];
    col.resize(times.size());
    col[0] = 0.0;
    for (std::size_t l = 1; l < times.size(); ++l) {
      const double dt = times[l] - times[l - 1];
      col[l] = col[l - 1] + std::sqrt(dt) * stream.normal(l - 1);
    }
  }
  return path;
}

std::vector<double> uniform_grid(double T, int steps) {
  if (!(T > 0) || steps < 1) throw std::invalid_argument("uniform_grid: bad arguments");
  std::vector<double> times(static_cast<std::size_t>(steps) + 1);
  for (int l = 0; l <= steps; ++l) {
    times[static_cast<std::size_t>(l)] =
        T * static_cast<double>(l) / static_cast<double>(steps);
  }
  times.back() = T;
  return times;
}

PathGrid project_path(const PathGrid& path, const Projection& proj) {
  if (proj.indices.empty() && proj.rank <= 0) {
    throw std::invalid_argument("project_path: rank must be positive");
  }
  for (int i : proj.indices) {
    if (i < 1 || i > path.n_coords()) {
      throw std::invalid_argument("project_path: index outside the path");
    }
  }
  PathGrid out = path;
  for (int i = 1; i <= path.n_coords(); ++i) {
    if (!proj.keeps(i)) {
      auto& col = out.coords[static_cast<std::size_t>(i - 1)];
      std::fill(col.begin(), col.end(), 0.0);
    }
  }
  return out;
}

std::vector<double> trapezoid_integral(std::span<const double> times,
                                       std::span<const double> values) {
  if (times.size() != values.size()) {
    throw std::invalid_argument("trapezoid_integral: size mismatch");
  }
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t l = 1; l < times.size(); ++l) {
    const double dt = times[l] - times[l - 1];
    out[l] = out[l - 1] + 0.5 * dt * (values[l] + values[l - 1]);
  }
  return out;
}

}  // namespace kolmo::wiener
