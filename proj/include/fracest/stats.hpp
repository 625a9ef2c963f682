#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "fracest/core/errors.hpp"

namespace fracest::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Sample variance with the n - 1 denominator.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Type-7 (linear interpolation) quantile of an ascending sample.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, p);
}

/// Population (biased) third standardized moment; 0 for a constant sample.
inline double skewness(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return 0.0;
  return m3 / std::pow(m2, 1.5);
}

/// Population excess-free kurtosis m4 / m2^2; 0 for a constant sample.
inline double kurtosis(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d2 = (v - m) * (v - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  if (m2 <= 0.0) return 0.0;
  return m4 / (m2 * m2);
}

struct NormalityTest {
  double statistic = 0.0;
  double p_value = 1.0;
  bool degenerate = false;  // zero-variance sample
};

/// Jarque-Bera test; the p-value uses the chi-square(2) limit, exp(-JB/2).
inline NormalityTest jarque_bera(std::span<const double> x) {
  if (x.size() < 3) throw ValidationError("Jarque-Bera needs at least three values");
  NormalityTest result;
  const double m = mean(x);
  double m2 = 0.0;
  for (double v : x) m2 += (v - m) * (v - m);
  // Rounding leaves a tiny spread in nominally constant samples.
  const double sd = std::sqrt(m2 / static_cast<double>(x.size()));
  if (!std::isfinite(m2) || sd <= 1e-12 * std::max(1.0, std::abs(m))) {
    result.degenerate = true;
    return result;
  }
  const double s = skewness(x);
  const double k = kurtosis(x);
  const double n = static_cast<double>(x.size());
  result.statistic = n / 6.0 * (s * s + 0.25 * (k - 3.0) * (k - 3.0));
  result.p_value = std::exp(-0.5 * result.statistic);
  return result;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Asymptotic Kolmogorov distribution tail P(K > lambda).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with
/// Stephens' small-sample correction of the statistic.
inline KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw ValidationError("KS test of empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sqrt_n = std::sqrt(n);
  return {d, kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

/// Two-sample Kolmogorov-Smirnov test.
inline KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS test of empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("line fit needs >= 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw DegenerateInputError("line fit with identical abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace fracest::stats
