#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fracest/core/errors.hpp"

namespace fracest {

/// Autocovariance of unit-spaced fractional Gaussian noise,
/// gamma_H(k) = (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}) / 2, with gamma_H(0) = 1.
inline double fgn_autocov(double hurst, std::size_t lag) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ValidationError("hurst out of (0,1)");
  if (lag == 0) return 1.0;
  const double two_h = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(k - 1.0, two_h));
}

/// gamma_H(0..count-1). Each power k^{2H} is evaluated once.
inline std::vector<double> fgn_autocov_sequence(double hurst, std::size_t count) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ValidationError("hurst out of (0,1)");
  std::vector<double> gamma(count);
  if (count == 0) return gamma;
  const double two_h = 2.0 * hurst;
  gamma[0] = 1.0;
  double prev = 0.0;  // (k-1)^{2H}
  double curr = 1.0;  // k^{2H}
  for (std::size_t k = 1; k < count; ++k) {
    const double next = std::pow(static_cast<double>(k + 1), two_h);
    gamma[k] = 0.5 * (next - 2.0 * curr + prev);
    prev = curr;
    curr = next;
  }
  return gamma;
}

}  // namespace fracest
