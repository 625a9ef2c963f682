#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/detail/fft.hpp"
#include "fracest/stats.hpp"

namespace fracest::classical {

/// How the estimator input is to be read.
enum class InputKind {
  level,       // a sample path; differenced internally where needed
  increments,  // already differenced; integrated internally where needed
};

struct HiguchiConfig {
  std::size_t k_max = 10;
  std::size_t min_length = 100;
};

/// First-order variogram (madogram) over the given lags; H is the log-log
/// slope of the mean absolute difference.
struct MadogramConfig {
  std::vector<std::size_t> lags{1, 2};
  std::size_t min_length = 100;
};

/// Second-order variogram; H is half the log-log slope.
struct VariogramConfig {
  std::vector<std::size_t> lags{1, 2};
  std::size_t min_length = 100;
};

/// Block sizes: explicit list, or (when empty) `points` log-spaced integers
/// in [min_block, length / max_fraction].
struct ScaleGrid {
  std::vector<std::size_t> sizes;
  std::size_t min_size = 16;
  std::size_t max_divisor = 4;
  std::size_t points = 12;
};

struct RescaledRangeConfig {
  ScaleGrid blocks{};
  std::size_t min_length = 256;
};

struct DfaConfig {
  ScaleGrid boxes{{}, 10, 4, 12};
  std::size_t min_length = 256;
};

struct WhittleConfig {
  std::size_t truncation = 200;     // |k| <= K terms of the aliased spectral sum
  std::size_t frequency_count = 0;  // 0: all Fourier frequencies in (0, pi)
  std::size_t min_length = 256;
};

struct EstimatorConfig {
  HiguchiConfig higuchi{};
  MadogramConfig madogram{};
  VariogramConfig variogram{};
  RescaledRangeConfig rescaled_range{};
  DfaConfig dfa{};
  WhittleConfig whittle{};
  InputKind input = InputKind::level;
  bool clip = false;  // map estimates into [0.01, 0.99]
};

inline double clip_estimate(double h) { return std::clamp(h, 0.01, 0.99); }

namespace detail {

inline void require_length(std::span<const double> x, std::size_t min_length, const char* name) {
  if (x.size() < min_length) {
    throw ValidationError(std::string(name) + " needs at least " + std::to_string(min_length) +
                          " points, got " + std::to_string(x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError(std::string(name) + ": non-finite input value");
  }
}

inline std::vector<double> difference(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

inline std::vector<double> integrate(std::span<const double> dx) {
  std::vector<double> x(dx.size() + 1, 0.0);
  for (std::size_t i = 0; i < dx.size(); ++i) x[i + 1] = x[i] + dx[i];
  return x;
}

inline std::vector<double> as_levels(std::span<const double> x, InputKind kind) {
  return kind == InputKind::level ? std::vector<double>(x.begin(), x.end()) : integrate(x);
}

inline std::vector<double> as_increments(std::span<const double> x, InputKind kind) {
  return kind == InputKind::increments ? std::vector<double>(x.begin(), x.end()) : difference(x);
}

inline double finish(double h, bool clip) { return clip ? clip_estimate(h) : h; }

inline std::vector<std::size_t> resolve_grid(const ScaleGrid& grid, std::size_t length) {
  if (!grid.sizes.empty()) return grid.sizes;
  const std::size_t hi = length / std::max<std::size_t>(grid.max_divisor, 1);
  const std::size_t lo = grid.min_size;
  std::vector<std::size_t> sizes;
  if (hi < lo || grid.points < 2) return sizes;
  const double log_lo = std::log(static_cast<double>(lo));
  const double log_hi = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid.points - 1);
    const auto s = static_cast<std::size_t>(std::llround(std::exp(log_lo + t * (log_hi - log_lo))));
    if (sizes.empty() || s != sizes.back()) sizes.push_back(s);
  }
  return sizes;
}

inline double log_log_slope(const std::vector<double>& scales, const std::vector<double>& values) {
  std::vector<double> lx(scales.size()), ly(values.size());
  for (std::size_t i = 0; i < scales.size(); ++i) {
    lx[i] = std::log(scales[i]);
    ly[i] = std::log(values[i]);
  }
  return stats::least_squares(lx, ly).slope;
}

}  // namespace detail

/// Higuchi normalized curve lengths L(k), k = 1..k_max.
inline std::vector<double> higuchi_curve_lengths(std::span<const double> x, std::size_t k_max) {
  const std::size_t n = x.size();
  std::vector<double> lengths(k_max, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t count = (n - 1 - m) / k;
      if (count == 0) continue;
      double sum = 0.0;
      for (std::size_t i = 1; i <= count; ++i) sum += std::abs(x[m + i * k] - x[m + (i - 1) * k]);
      const double norm = static_cast<double>(n - 1) / (static_cast<double>(count) * static_cast<double>(k));
      total += sum * norm / static_cast<double>(k);
      ++used;
    }
    lengths[k - 1] = used ? total / static_cast<double>(used) : 0.0;
  }
  return lengths;
}

/// Higuchi estimator: L(k) ~ k^{-D}, H = 2 - D.
inline double higuchi(std::span<const double> path, const EstimatorConfig& cfg = {}) {
  const auto& hc = cfg.higuchi;
  if (hc.k_max < 2) throw ValidationError("higuchi: k_max must be >= 2");
  const auto x = detail::as_levels(path, cfg.input);
  detail::require_length(x, std::max<std::size_t>(hc.min_length, 2 * hc.k_max), "higuchi");

  const auto lengths = higuchi_curve_lengths(x, hc.k_max);
  std::vector<double> ks(hc.k_max);
  for (std::size_t k = 1; k <= hc.k_max; ++k) {
    if (!(lengths[k - 1] > 0.0)) throw DegenerateInputError("higuchi: constant path");
    ks[k - 1] = static_cast<double>(k);
  }
  const double dimension = -detail::log_log_slope(ks, lengths);
  return detail::finish(2.0 - dimension, cfg.clip);
}

namespace detail {

inline double mean_abs_power_difference(std::span<const double> x, std::size_t lag, int power) {
  double sum = 0.0;
  const std::size_t count = x.size() - lag;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = std::abs(x[i + lag] - x[i]);
    sum += power == 1 ? d : d * d;
  }
  return sum / static_cast<double>(count);
}

inline double variogram_slope(std::span<const double> x, const std::vector<std::size_t>& lags,
                              int power, const char* name) {
  if (lags.size() < 2) throw ValidationError(std::string(name) + ": need >= 2 lags");
  std::vector<double> scales, values;
  for (std::size_t lag : lags) {
    if (lag == 0 || lag >= x.size()) {
      throw ValidationError(std::string(name) + ": lag " + std::to_string(lag) + " out of range");
    }
    const double v = mean_abs_power_difference(x, lag, power);
    if (!(v > 0.0)) throw DegenerateInputError(std::string(name) + ": zero variogram at lag " +
                                               std::to_string(lag));
    scales.push_back(static_cast<double>(lag));
    values.push_back(v);
  }
  return log_log_slope(scales, values);
}

}  // namespace detail

/// Madogram: V(l) = mean |x_{i+l} - x_i|, fractal dimension D = 2 - slope,
/// returned as H = 2 - D.
inline double madogram(std::span<const double> path, const EstimatorConfig& cfg = {}) {
  const auto x = detail::as_levels(path, cfg.input);
  detail::require_length(x, cfg.madogram.min_length, "madogram");
  const double slope = detail::variogram_slope(x, cfg.madogram.lags, 1, "madogram");
  const double dimension = 2.0 - slope;
  return detail::finish(2.0 - dimension, cfg.clip);
}

inline double variogram(std::span<const double> path, const EstimatorConfig& cfg = {}) {
  const auto x = detail::as_levels(path, cfg.input);
  detail::require_length(x, cfg.variogram.min_length, "variogram");
  const double slope = detail::variogram_slope(x, cfg.variogram.lags, 2, "variogram");
  return detail::finish(0.5 * slope, cfg.clip);
}

/// Classical rescaled-range statistic averaged over non-overlapping blocks.
inline double rescaled_range(std::span<const double> path, const EstimatorConfig& cfg = {}) {
  const auto y = detail::as_increments(path, cfg.input);
  detail::require_length(y, cfg.rescaled_range.min_length - (cfg.input == InputKind::level ? 1 : 0),
                         "rescaled_range");
  const auto sizes = detail::resolve_grid(cfg.rescaled_range.blocks, y.size());
  if (sizes.size() < 2) throw ValidationError("rescaled_range: need >= 2 block sizes");

  std::vector<double> scales, values;
  std::vector<double> cum;
  for (std::size_t s : sizes) {
    if (s < 2 || s > y.size()) {
      throw ValidationError("rescaled_range: block size " + std::to_string(s) +
                            " incompatible with length " + std::to_string(y.size()));
    }
    const std::size_t blocks = y.size() / s;
    double total = 0.0;
    std::size_t used = 0;
    cum.resize(s);
    for (std::size_t b = 0; b < blocks; ++b) {
      const auto seg = std::span<const double>(y).subspan(b * s, s);
      const double m = stats::mean(seg);
      double run = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
      for (std::size_t t = 0; t < s; ++t) {
        const double d = seg[t] - m;
        run += d;
        ss += d * d;
        if (t == 0) lo = hi = run;
        lo = std::min(lo, run);
        hi = std::max(hi, run);
      }
      const double sd = std::sqrt(ss / static_cast<double>(s));
      if (!(sd > 0.0)) continue;  // degenerate block
      total += (hi - lo) / sd;
      ++used;
    }
    if (used == 0 || !(total > 0.0)) continue;
    scales.push_back(static_cast<double>(s));
    values.push_back(total / static_cast<double>(used));
  }
  if (scales.size() < 2) throw DegenerateInputError("rescaled_range: all blocks degenerate");
  return detail::finish(detail::log_log_slope(scales, values), cfg.clip);
}

/// Detrended fluctuation analysis of order 1.
inline double dfa(std::span<const double> path, const EstimatorConfig& cfg = {}) {
  const auto y = detail::as_increments(path, cfg.input);
  if (!cfg.dfa.boxes.sizes.empty() && cfg.dfa.boxes.sizes.size() < 2) {
    throw ValidationError("dfa: need >= 2 box sizes");
  }
  detail::require_length(y, cfg.dfa.min_length - (cfg.input == InputKind::level ? 1 : 0), "dfa");
  const auto sizes = detail::resolve_grid(cfg.dfa.boxes, y.size());
  if (sizes.size() < 2) throw ValidationError("dfa: need >= 2 box sizes");
  for (std::size_t s : sizes) {
    if (s < 3 || s > y.size()) {
      throw ValidationError("dfa: box size " + std::to_string(s) + " incompatible with length " +
                            std::to_string(y.size()));
    }
  }

  const double ybar = stats::mean(y);
  std::vector<double> profile(y.size());
  double run = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    run += y[i] - ybar;
    profile[i] = run;
  }

  std::vector<double> scales, values;
  for (std::size_t s : sizes) {
    const std::size_t boxes = profile.size() / s;
    const double sd = static_cast<double>(s);
    const double t_mean = 0.5 * (sd - 1.0);
    const double stt = sd * (sd * sd - 1.0) / 12.0;  // sum (t - t_mean)^2
    double total = 0.0;
    for (std::size_t b = 0; b < boxes; ++b) {
      const auto seg = std::span<const double>(profile).subspan(b * s, s);
      const double m = stats::mean(seg);
      double syy = 0.0, sty = 0.0;
      for (std::size_t t = 0; t < s; ++t) {
        const double d = seg[t] - m;
        syy += d * d;
        sty += (static_cast<double>(t) - t_mean) * d;
      }
      total += std::max(0.0, syy - sty * sty / stt) / sd;
    }
    const double f2 = total / static_cast<double>(boxes);
    if (!(f2 > 0.0)) throw DegenerateInputError("dfa: zero fluctuation at box size " + std::to_string(s));
    scales.push_back(sd);
    values.push_back(std::sqrt(f2));
  }
  return detail::finish(detail::log_log_slope(scales, values), cfg.clip);
}

namespace detail {

// log|lambda_j + 2 pi k| for the Fourier frequencies of a length-n series,
// rows = frequencies, columns = k in [-K, K]. Depends on (n, count, K) only.
struct WhittleTable {
  Eigen::ArrayXXd log_abs;     // frequencies x (2K + 1)
  Eigen::ArrayXd log_one_minus_cos;
};

inline std::shared_ptr<const WhittleTable> whittle_table(std::size_t n, std::size_t count,
                                                         std::size_t truncation) {
  static std::mutex mutex;
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t>,
                  std::shared_ptr<const WhittleTable>> cache;
  const auto key = std::make_tuple(n, count, truncation);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto table = std::make_shared<WhittleTable>();
  const auto kk = static_cast<Eigen::Index>(2 * truncation + 1);
  table->log_abs.resize(static_cast<Eigen::Index>(count), kk);
  table->log_one_minus_cos.resize(static_cast<Eigen::Index>(count));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j < count; ++j) {
    const double lambda = two_pi * static_cast<double>(j + 1) / static_cast<double>(n);
    table->log_one_minus_cos(static_cast<Eigen::Index>(j)) = std::log(1.0 - std::cos(lambda));
    for (Eigen::Index c = 0; c < kk; ++c) {
      const double k = static_cast<double>(c) - static_cast<double>(truncation);
      table->log_abs(static_cast<Eigen::Index>(j), c) = std::log(std::abs(lambda + two_pi * k));
    }
  }
  std::lock_guard lock(mutex);
  cache.emplace(key, table);
  return table;
}

}  // namespace detail

/// Profile Whittle objective for fGn at the positive Fourier frequencies,
///   Q(H) = log(mean_j I_j / g_H(l_j)) + mean_j log g_H(l_j),
/// with g_H(l) = (1 - cos l) sum_{|k|<=K} |l + 2 pi k|^{-2H-1}. Minimizing Q is
/// the Whittle likelihood with the spectral scale profiled out.
class WhittleObjective {
public:
  WhittleObjective(std::span<const double> increments, const WhittleConfig& cfg) {
    const std::size_t n = increments.size();
    const std::size_t max_count = (n - 1) / 2;
    const std::size_t count = cfg.frequency_count == 0 ? max_count
                                                        : std::min(cfg.frequency_count, max_count);
    if (count < 2) throw ValidationError("whittle: series too short");
    table_ = detail::whittle_table(n, count, cfg.truncation);

    const auto spectrum = fft::forward_real(increments);
    periodogram_.resize(static_cast<Eigen::Index>(count));
    const double norm = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(n));
    for (std::size_t j = 0; j < count; ++j) {
      periodogram_(static_cast<Eigen::Index>(j)) = std::norm(spectrum[j + 1]) * norm;
    }
    if (!(periodogram_.maxCoeff() > 0.0)) throw DegenerateInputError("whittle: constant series");
  }

  double operator()(double hurst) const {
    const double exponent = -2.0 * hurst - 1.0;
    const Eigen::ArrayXd sums = (exponent * table_->log_abs).exp().rowwise().sum();
    const Eigen::ArrayXd log_g = table_->log_one_minus_cos + sums.log();
    const double fit = (periodogram_ * (-log_g).exp()).mean();
    return std::log(fit) + log_g.mean();
  }

  // dQ/dH. Its zero crossing pins H far tighter than comparing Q values near a
  // flat minimum, which is what keeps the estimate scale invariant.
  double slope(double hurst) const {
    const double exponent = -2.0 * hurst - 1.0;
    const Eigen::ArrayXXd terms = (exponent * table_->log_abs).exp();
    const Eigen::ArrayXd sums = terms.rowwise().sum();
    const Eigen::ArrayXd dlog_g = -2.0 * (terms * table_->log_abs).rowwise().sum() / sums;
    const Eigen::ArrayXd log_g = table_->log_one_minus_cos + sums.log();
    const Eigen::ArrayXd ratio = periodogram_ * (-log_g).exp();
    return -(ratio * dlog_g).mean() / ratio.mean() + dlog_g.mean();
  }

private:
  std::shared_ptr<const detail::WhittleTable> table_;
  Eigen::ArrayXd periodogram_;
};

/// Whittle estimator for fGn: coarse grid on [0.01, 0.99], then bisection on
/// dQ/dH around the best grid point (golden section when the minimum sits on
/// the range edge).
inline double whittle(std::span<const double> path, const EstimatorConfig& cfg = {}) {
  const auto y = detail::as_increments(path, cfg.input);
  detail::require_length(y, cfg.whittle.min_length - (cfg.input == InputKind::level ? 1 : 0),
                         "whittle");
  const WhittleObjective objective(y, cfg.whittle);

  constexpr double lo = 0.01, hi = 0.99, step = 0.04;
  double best_h = lo, best_q = std::numeric_limits<double>::infinity();
  for (double h = lo; h <= hi + 1e-12; h += step) {
    const double q = objective(h);
    if (std::isfinite(q) && q < best_q) {
      best_q = q;
      best_h = h;
    }
  }
  if (!std::isfinite(best_q)) throw NumericalError("whittle: objective non-finite across the grid");

  double a = std::max(lo, best_h - step), b = std::min(hi, best_h + step);
  if (objective.slope(a) < 0.0 && objective.slope(b) > 0.0) {
    while (b - a > 1e-13) {
      const double m = 0.5 * (a + b);
      if (m <= a || m >= b) break;
      (objective.slope(m) < 0.0 ? a : b) = m;
    }
    return detail::finish(0.5 * (a + b), cfg.clip);
  }
  // minimum at the edge of the search range
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > 1e-7) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  return detail::finish(0.5 * (a + b), cfg.clip);
}

enum class EstimatorKind { higuchi, madogram, variogram, rescaled_range, dfa, whittle };

inline constexpr EstimatorKind kAllEstimators[] = {
    EstimatorKind::higuchi,        EstimatorKind::madogram, EstimatorKind::variogram,
    EstimatorKind::rescaled_range, EstimatorKind::dfa,      EstimatorKind::whittle};

inline std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::higuchi: return "higuchi";
    case EstimatorKind::madogram: return "madogram";
    case EstimatorKind::variogram: return "variogram";
    case EstimatorKind::rescaled_range: return "rs";
    case EstimatorKind::dfa: return "dfa";
    case EstimatorKind::whittle: return "whittle";
  }
  return "unknown";
}

inline EstimatorKind parse_estimator(std::string_view name) {
  for (auto kind : kAllEstimators) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "rescaled_range") return EstimatorKind::rescaled_range;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

inline double estimate(EstimatorKind kind, std::span<const double> path,
                       const EstimatorConfig& cfg = {}) {
  switch (kind) {
    case EstimatorKind::higuchi: return higuchi(path, cfg);
    case EstimatorKind::madogram: return madogram(path, cfg);
    case EstimatorKind::variogram: return variogram(path, cfg);
    case EstimatorKind::rescaled_range: return rescaled_range(path, cfg);
    case EstimatorKind::dfa: return dfa(path, cfg);
    case EstimatorKind::whittle: return whittle(path, cfg);
  }
  throw ValidationError("unknown estimator");
}

}  // namespace fracest::classical
