#pragma once

#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fracest/eval/metrics.hpp"
#include "fracest/generators/trajectory_io.hpp"

namespace fracest::eval {

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); }

}  // namespace detail

inline void write_report_csv(std::ostream& out, std::span<const std::pair<std::string, EvalReport>> rows) {
  out << "label,count,rmse,mae,mre_percent,abs_max,abs_q95,abs_q50,rel_q95_percent,rel_q50_percent,"
         "abs_skewness,rel_count,rel_threshold\n";
  for (const auto& [label, r] : rows) {
    const auto rel = r.rel_error_percent;
    out << label << ',' << r.count << ',' << format_double(r.rmse) << ',' << format_double(r.mae) << ','
        << detail::cell(r.mre_percent) << ',' << format_double(r.abs_error.max) << ','
        << format_double(r.abs_error.q95) << ',' << format_double(r.abs_error.q50) << ','
        << detail::cell(rel ? std::optional(rel->q95) : std::nullopt) << ','
        << detail::cell(rel ? std::optional(rel->q50) : std::nullopt) << ',' << format_double(r.skewness)
        << ',' << r.rel_count << ',' << format_double(r.rel_threshold) << '\n';
  }
}

/// Aligned table: one row per labelled report, four decimals, percentages two.
inline std::string format_report_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  std::ostringstream os;
  auto pct = [&os](const std::optional<double>& v) {
    os << std::setw(9);
    if (v) os << std::setprecision(2) << *v;
    else os << "-";
    os << std::setprecision(4);
  };
  os << std::left << std::setw(16) << "" << std::right << std::setw(9) << "RMSE" << std::setw(9) << "MAE"
     << std::setw(9) << "MRE%" << std::setw(9) << "absMax" << std::setw(9) << "absQ95" << std::setw(9)
     << "absQ50" << std::setw(9) << "relQ95%" << std::setw(9) << "relQ50%" << std::setw(9) << "skew" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& [label, r] : rows) {
    const auto rel = r.rel_error_percent;
    os << std::left << std::setw(16) << label << std::right << std::setw(9) << r.rmse << std::setw(9) << r.mae;
    pct(r.mre_percent);
    os << std::setw(9) << r.abs_error.max << std::setw(9) << r.abs_error.q95 << std::setw(9)
       << r.abs_error.q50;
    pct(rel ? std::optional(rel->q95) : std::nullopt);
    pct(rel ? std::optional(rel->q50) : std::nullopt);
    os << std::setw(9) << std::setprecision(2) << r.skewness << std::setprecision(4) << '\n';
  }
  return os.str();
}

/// One JSON object per line: index, true_h, est_h, abs_error.
inline void write_pairs_jsonl(std::ostream& out, std::span<const EvalPair> pairs) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const nlohmann::json j = {{"index", i},
                              {"true_h", pairs[i].true_h},
                              {"est_h", pairs[i].est_h},
                              {"abs_error", std::abs(pairs[i].est_h - pairs[i].true_h)}};
    out << j.dump() << '\n';
  }
}

inline void write_localized_csv(std::ostream& out, std::span<const LocalizedQuantile> rows) {
  out << "center,count,sufficient,rel_quantile_percent\n";
  for (const auto& r : rows) {
    out << format_double(r.center) << ',' << r.count << ',' << (r.sufficient ? 1 : 0) << ','
        << detail::cell(r.quantile_percent) << '\n';
  }
}

inline void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_left,bin_right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  }
}

}  // namespace fracest::eval
