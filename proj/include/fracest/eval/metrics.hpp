#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/stats.hpp"

namespace fracest::eval {

struct EvalPair {
  double true_h = 0.0;
  double est_h = 0.0;
};

struct AbsErrorSummary {
  double max = 0.0;
  double q95 = 0.0;
  double q50 = 0.0;
};

struct RelErrorSummary {
  double q95 = 0.0;  // percent
  double q50 = 0.0;  // percent
};

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> mre_percent;  // absent when no pair reaches the threshold
  AbsErrorSummary abs_error;
  std::optional<RelErrorSummary> rel_error_percent;
  double skewness = 0.0;  // of the absolute errors; 0 when they are all equal
  std::size_t count = 0;
  std::size_t rel_count = 0;  // pairs with true_h >= rel_threshold
  double rel_threshold = 0.02;
};

inline void validate_pairs(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw ValidationError("no evaluation pairs");
  for (const auto& p : pairs) {
    if (!(p.true_h > 0.0 && p.true_h < 1.0)) throw ValidationError("true H out of (0,1)");
    if (!std::isfinite(p.est_h)) throw ValidationError("non-finite estimate");
  }
}

/// Relative errors in percent of the pairs whose true H is at least `threshold`.
inline std::vector<double> relative_errors_percent(std::span<const EvalPair> pairs, double threshold) {
  std::vector<double> rel;
  for (const auto& p : pairs) {
    if (p.true_h >= threshold) rel.push_back(100.0 * std::abs(p.est_h - p.true_h) / p.true_h);
  }
  return rel;
}

inline EvalReport compute_report(std::span<const EvalPair> pairs, double rel_threshold = 0.02) {
  validate_pairs(pairs);
  EvalReport r;
  r.count = pairs.size();
  r.rel_threshold = rel_threshold;

  std::vector<double> abs_err(pairs.size());
  double sq = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = pairs[i].est_h - pairs[i].true_h;
    abs_err[i] = std::abs(e);
    sq += e * e;
    ab += abs_err[i];
  }
  const double n = static_cast<double>(pairs.size());
  r.rmse = std::sqrt(sq / n);
  r.mae = ab / n;
  r.skewness = stats::skewness(abs_err);

  std::sort(abs_err.begin(), abs_err.end());
  r.abs_error = {abs_err.back(), stats::quantile_sorted(abs_err, 0.95),
                 stats::quantile_sorted(abs_err, 0.5)};

  auto rel = relative_errors_percent(pairs, rel_threshold);
  r.rel_count = rel.size();
  if (!rel.empty()) {
    r.mre_percent = stats::mean(rel);
    std::sort(rel.begin(), rel.end());
    r.rel_error_percent = RelErrorSummary{stats::quantile_sorted(rel, 0.95), stats::quantile_sorted(rel, 0.5)};
  }
  return r;
}

struct LocalizedQuantile {
  double center = 0.0;
  std::size_t count = 0;
  bool sufficient = false;
  std::optional<double> quantile_percent;  // set only when sufficient
};

struct LocalizedOptions {
  std::vector<double> centers = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double half_width = 0.1;
  double q = 0.95;
  std::size_t min_count = 30;
  double rel_threshold = 0.02;
};

/// q-quantile of relative errors over pairs with true H within half_width of
/// each center.
inline std::vector<LocalizedQuantile> localized_rel_quantiles(std::span<const EvalPair> pairs,
                                                              const LocalizedOptions& opt = {}) {
  constexpr double slack = 1e-12;  // centers like 0.3 are not exact in binary
  std::vector<LocalizedQuantile> out;
  for (double c : opt.centers) {
    std::vector<double> rel;
    for (const auto& p : pairs) {
      if (p.true_h < opt.rel_threshold) continue;
      if (p.true_h >= c - opt.half_width - slack && p.true_h <= c + opt.half_width + slack) {
        rel.push_back(100.0 * std::abs(p.est_h - p.true_h) / p.true_h);
      }
    }
    LocalizedQuantile lq{c, rel.size(), rel.size() >= opt.min_count, std::nullopt};
    if (lq.sufficient) lq.quantile_percent = stats::quantile(std::move(rel), opt.q);
    out.push_back(lq);
  }
  return out;
}

/// Interval est +- abs_q, clipped to [0, 1].
inline std::pair<double, double> confidence_interval(double est, double abs_q) {
  if (!(abs_q >= 0.0)) throw ValidationError("quantile must be >= 0");
  return {std::max(est - abs_q, 0.0), std::min(est + abs_q, 1.0)};
}

enum class RelInversion { exact, symmetric };

/// Interval for H from a relative-error quantile q (percent). The exact form
/// solves |est - H| / H <= q for H; the symmetric form is est (1 -+ q).
inline std::pair<double, double> rel_confidence_interval(double est, double rel_q_percent,
                                                         RelInversion mode = RelInversion::exact) {
  if (!(est > 0.0)) throw ValidationError("estimate must be > 0");
  if (!(rel_q_percent >= 0.0)) throw ValidationError("relative quantile must be >= 0");
  const double q = rel_q_percent / 100.0;
  if (mode == RelInversion::symmetric) {
    return {std::max(est * (1.0 - q), 0.0), std::min(est * (1.0 + q), 1.0)};
  }
  const double hi = q >= 1.0 ? 1.0 : std::min(est / (1.0 - q), 1.0);
  return {std::min(est / (1.0 + q), 1.0), hi};
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<std::size_t> counts;
};

/// Fixed-width histogram over [min, max]; the last bin is closed.
inline Histogram histogram(std::span<const double> x, std::size_t bins) {
  if (x.empty()) throw ValidationError("histogram of empty sample");
  if (bins < 1) throw ValidationError("histogram needs >= 1 bin");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  for (double v : x) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    h.counts[std::min(b, bins - 1)]++;
  }
  return h;
}

struct ErrorDiagnostics {
  stats::NormalityTest normality;  // Jarque-Bera on the raw errors est - true
  Histogram estimates;
  Histogram abs_errors;
  bool degenerate = false;  // raw errors constant
};

inline ErrorDiagnostics error_diagnostics(std::span<const EvalPair> pairs, std::size_t bins = 20) {
  validate_pairs(pairs);
  if (pairs.size() < 100) throw ValidationError("error diagnostics need >= 100 pairs");
  std::vector<double> raw, est, abs_err;
  for (const auto& p : pairs) {
    raw.push_back(p.est_h - p.true_h);
    est.push_back(p.est_h);
    abs_err.push_back(std::abs(p.est_h - p.true_h));
  }
  ErrorDiagnostics d;
  d.normality = stats::jarque_bera(raw);
  d.degenerate = d.normality.degenerate;
  d.estimates = histogram(est, bins);
  d.abs_errors = histogram(abs_err, bins);
  return d;
}

}  // namespace fracest::eval
