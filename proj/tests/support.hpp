#pragma once

#include <cmath>
#include <random>

#include "valunlearn/dataset.hpp"

namespace testsupport {

using valunlearn::Dataset;
using valunlearn::FeatureMatrix;
using valunlearn::Index;
using valunlearn::Vector;

/// Gaussian features scaled into the unit ball, labels from a noisy linear rule.
inline Dataset random_dataset(Index n, Index d, std::uint64_t seed, double noise = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix x(n, d);
  Vector truth(d);
  for (Index j = 0; j < d; ++j) truth(j) = normal(rng);
  Vector y(n);
  double max_norm = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
    max_norm = std::max(max_norm, x.row(i).norm());
  }
  x /= max_norm;
  for (Index i = 0; i < n; ++i) {
    const double s = x.row(i).dot(truth) + noise * normal(rng) / std::sqrt(static_cast<double>(d));
    y(i) = s >= 0 ? 1.0 : -1.0;
  }
  return Dataset(std::move(x), std::move(y));
}

inline Vector random_vector(Index d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(d);
  for (Index j = 0; j < d; ++j) v(j) = normal(rng);
  return v;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testsupport
