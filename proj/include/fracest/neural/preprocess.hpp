#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fracest/core/errors.hpp"

namespace fracest::neural {

/// Standardized increments of a path: the network's input representation.
/// Invariant to x -> a x + b + c t for a > 0 (shift, scale and linear drift).
struct StandardizedIncrements {
  std::vector<double> values;
};

/// Differences the path, then removes the sample mean and divides by the
/// sample (n - 1 denominator) standard deviation.
inline StandardizedIncrements preprocess(std::span<const double> path) {
  if (path.size() < 3) throw ValidationError("preprocess needs a path of length >= 3");
  const std::size_t m = path.size() - 1;
  std::vector<double> inc(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    inc[i] = path[i + 1] - path[i];
    if (!std::isfinite(inc[i])) throw ValidationError("preprocess: non-finite path value");
    sum += inc[i];
  }
  const double mean = sum / static_cast<double>(m);
  double ss = 0.0;
  for (double v : inc) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  if (!(sd >= 1e-12 * std::max(1.0, std::abs(mean)))) {
    throw DegenerateInputError("degenerate input: increments have (near) zero variance");
  }
  for (auto& v : inc) v = (v - mean) / sd;
  return {std::move(inc)};
}

}  // namespace fracest::neural
