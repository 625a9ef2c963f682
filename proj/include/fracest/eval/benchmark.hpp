#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/core/random.hpp"
#include "fracest/generators/batch.hpp"
#include "fracest/generators/trajectory_io.hpp"

namespace fracest::eval {

/// Maps a set of paths to one estimate per path.
using BatchEstimator = std::function<std::vector<double>(std::span<const std::vector<double>>)>;

struct BenchmarkRow {
  std::string label;        // e.g. the training length
  BatchEstimator estimator;  // empty: the model is missing and the row is absent
};

struct BenchmarkMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::size_t> eval_lengths;
  std::vector<std::vector<std::optional<double>>> rmse;  // [row][column]
};

struct BenchmarkOptions {
  std::size_t paths_per_cell = 2000;
  std::uint64_t seed = 0;
  GenerationRequest base{};  // process and parameters; n, count and seed are overridden
  unsigned threads = 1;
};

/// RMSE of every row's estimator at every evaluation length. Path i of every
/// cell is the length-n prefix of one path of the longest length, so all cells
/// share their H values and noise (prefixes of an exact path are exact paths).
inline BenchmarkMatrix benchmark_matrix(std::span<const BenchmarkRow> rows,
                                        std::span<const std::size_t> eval_lengths,
                                        const BenchmarkOptions& opt) {
  if (eval_lengths.empty()) throw ValidationError("no evaluation lengths");
  if (opt.paths_per_cell < 1) throw ValidationError("paths per cell must be >= 1");
  std::size_t longest = 0;
  for (auto n : eval_lengths) {
    if (n < 3) throw ValidationError("evaluation lengths must be >= 3");
    longest = std::max(longest, n);
  }

  GenerationRequest req = opt.base;
  req.n = longest;
  req.count = opt.paths_per_cell;
  req.master_seed = derive_seed(opt.seed, "benchmark");
  req.first_index = 0;
  req.hurst_mode = HurstMode::uniform;
  req.threads = opt.threads;
  const auto paths = generate_batch(req);

  BenchmarkMatrix m;
  m.eval_lengths.assign(eval_lengths.begin(), eval_lengths.end());
  m.rmse.assign(rows.size(), std::vector<std::optional<double>>(eval_lengths.size()));
  for (const auto& r : rows) m.row_labels.push_back(r.label);

  for (std::size_t c = 0; c < eval_lengths.size(); ++c) {
    std::vector<std::vector<double>> prefixes;
    prefixes.reserve(paths.size());
    for (const auto& p : paths) {
      prefixes.emplace_back(p.values.begin(), p.values.begin() + static_cast<std::ptrdiff_t>(eval_lengths[c]));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].estimator) continue;
      const auto est = rows[r].estimator(prefixes);
      double sq = 0.0;
      for (std::size_t i = 0; i < paths.size(); ++i) {
        const double e = est[i] - *paths[i].meta.true_hurst();
        sq += e * e;
      }
      m.rmse[r][c] = std::sqrt(sq / static_cast<double>(paths.size()));
    }
  }
  return m;
}

inline void write_matrix_csv(std::ostream& out, const BenchmarkMatrix& m) {
  out << "train_length";
  for (auto n : m.eval_lengths) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < m.rmse.size(); ++r) {
    out << m.row_labels[r];
    for (const auto& v : m.rmse[r]) out << ',' << (v ? format_double(*v) : std::string("NA"));
    out << '\n';
  }
}

inline std::string format_matrix_text(const BenchmarkMatrix& m) {
  std::ostringstream os;
  os << std::left << std::setw(14) << "train \\ eval";
  for (auto n : m.eval_lengths) os << std::right << std::setw(10) << n;
  os << '\n';
  os << std::fixed << std::setprecision(4);
  for (std::size_t r = 0; r < m.rmse.size(); ++r) {
    os << std::left << std::setw(14) << m.row_labels[r];
    for (const auto& v : m.rmse[r]) {
      os << std::right << std::setw(10);
      if (v) os << *v;
      else os << "-";
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fracest::eval
