#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fracest/core/params.hpp"

namespace fracest {

struct TrajectoryMeta {
  ProcessKind kind = ProcessKind::fbm;
  std::optional<ProcessParams> params;  // true generating parameters, if known
  std::uint64_t master_seed = 0;
  std::uint64_t index = 0;

  std::optional<double> true_hurst() const {
    if (!params) return std::nullopt;
    return hurst_of(*params);
  }

  friend bool operator==(const TrajectoryMeta&, const TrajectoryMeta&) = default;
};

/// One equally spaced sample path on [0, T], dt = T / (n - 1).
struct Trajectory {
  std::vector<double> values;
  double dt = 1.0;
  TrajectoryMeta meta;

  std::size_t size() const noexcept { return values.size(); }
  double horizon() const noexcept { return dt * static_cast<double>(values.size() - 1); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace fracest
