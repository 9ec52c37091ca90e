#pragma once

// Brute-force references used by the unit and acceptance suites. They share
// no code with the library beyond the Dataset container.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "valunlearn/dataset.hpp"

namespace oracles {

using valunlearn::Dataset;
using valunlearn::Index;
using valunlearn::Vector;

/// KNN utility of a subset: (1/k) * number of label matches among the
/// min(k, |S|) nearest members of S, distance ties broken by ascending id.
inline double knn_utility(const Dataset& train, const std::vector<Index>& members, const Vector& x, double y,
                          int k) {
  std::vector<Index> sorted = members;
  std::sort(sorted.begin(), sorted.end(), [&](Index a, Index b) {
    const double da = (train.row(a).transpose() - x).squaredNorm();
    const double db = (train.row(b).transpose() - x).squaredNorm();
    if (da != db) return da < db;
    return train.id(a) < train.id(b);
  });
  double hits = 0;
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), sorted.size());
  for (std::size_t j = 0; j < take; ++j) hits += train.label(sorted[j]) == y ? 1.0 : 0.0;
  return hits / k;
}

/// Exact Shapley values of the KNN utility for one test point by enumerating
/// all 2^n coalitions.
inline Vector shapley_by_enumeration(const Dataset& train, const Vector& x, double y, int k) {
  const Index n = train.size();
  std::vector<double> factorial(static_cast<std::size_t>(n + 1), 1.0);
  for (Index i = 1; i <= n; ++i) factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;
  const unsigned long full = 1ul << n;
  std::vector<double> utility(full);
  for (unsigned long mask = 0; mask < full; ++mask) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i) {
      if (mask & (1ul << i)) members.push_back(i);
    }
    utility[mask] = knn_utility(train, members, x, y, k);
  }
  Vector phi = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (unsigned long mask = 0; mask < full; ++mask) {
      if (mask & (1ul << i)) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountl(mask));
      const double weight =
          factorial[size] * factorial[static_cast<std::size_t>(n) - size - 1] / factorial[static_cast<std::size_t>(n)];
      phi(i) += weight * (utility[mask | (1ul << i)] - utility[mask]);
    }
  }
  return phi;
}

}  // namespace oracles
