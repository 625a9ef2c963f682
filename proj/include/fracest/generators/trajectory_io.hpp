#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/core/trajectory.hpp"
#include "fracest/detail/binary_io.hpp"

namespace fracest {

// Binary trajectory batch, all integers and floats little-endian:
//
//   header   : "FRTJ" | u32 version | u64 n | u64 count | u32 process kind | u32 reserved
//   record i : u64 index | u64 master_seed | u32 has_params | u32 reserved
//              | f64 hurst | f64 p[4] | f64 dt | f64 values[n]
//
// p[] holds (kappa, theta, sigma, x0) for fOU, (alpha, scale, 0, 0) for lfsm
// and zeros for fBm. hurst and p[] are NaN when has_params is 0.
inline constexpr char kTrajectoryMagic[5] = "FRTJ";
inline constexpr std::uint32_t kTrajectoryFormatVersion = 1;

namespace detail {

inline std::array<double, 4> pack_params(const ProcessParams& params) {
  return std::visit(
      [](const auto& p) -> std::array<double, 4> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FouParams>) return {p.kappa, p.theta, p.sigma, p.x0};
        else if constexpr (std::is_same_v<P, LfsmParams>) return {p.alpha, p.scale, 0.0, 0.0};
        else return {0.0, 0.0, 0.0, 0.0};
      },
      params);
}

inline ProcessParams unpack_params(ProcessKind kind, double hurst, const std::array<double, 4>& p) {
  switch (kind) {
    case ProcessKind::fbm: return FbmParams{hurst};
    case ProcessKind::fou: return FouParams{hurst, p[0], p[1], p[2], p[3]};
    case ProcessKind::lfsm: return LfsmParams{hurst, p[0], p[1]};
  }
  throw CorruptFileError("unknown process kind");
}

}  // namespace detail

inline void write_trajectory_header(std::ostream& out, std::uint64_t n, std::uint64_t count,
                                    ProcessKind kind) {
  io::write_magic(out, kTrajectoryMagic);
  io::write_le<std::uint32_t>(out, kTrajectoryFormatVersion);
  io::write_le<std::uint64_t>(out, n);
  io::write_le<std::uint64_t>(out, count);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  io::write_le<std::uint32_t>(out, 0);
}

inline void write_trajectory_record(std::ostream& out, const Trajectory& t) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  io::write_le<std::uint64_t>(out, t.meta.index);
  io::write_le<std::uint64_t>(out, t.meta.master_seed);
  io::write_le<std::uint32_t>(out, t.meta.params ? 1u : 0u);
  io::write_le<std::uint32_t>(out, 0);
  const double hurst = t.meta.params ? hurst_of(*t.meta.params) : nan;
  const auto p = t.meta.params ? detail::pack_params(*t.meta.params)
                               : std::array<double, 4>{nan, nan, nan, nan};
  io::write_le(out, hurst);
  for (double v : p) io::write_le(out, v);
  io::write_le(out, t.dt);
  for (double v : t.values) io::write_le(out, v);
}

inline void write_trajectories_binary(std::ostream& out, std::span<const Trajectory> batch) {
  const std::uint64_t n = batch.empty() ? 0 : batch.front().values.size();
  const ProcessKind kind = batch.empty() ? ProcessKind::fbm : batch.front().meta.kind;
  for (const auto& t : batch) {
    if (t.values.size() != n) throw ValidationError("binary batch requires equal path lengths");
    if (t.meta.kind != kind) throw ValidationError("binary batch requires a single process kind");
  }
  write_trajectory_header(out, n, batch.size(), kind);
  for (const auto& t : batch) write_trajectory_record(out, t);
  if (!out) throw IoError("failed writing trajectory batch");
}

inline std::vector<Trajectory> read_trajectories_binary(std::istream& in) {
  io::expect_magic(in, kTrajectoryMagic, "trajectory file");
  const auto version = io::read_le<std::uint32_t>(in);
  if (version != kTrajectoryFormatVersion) {
    throw VersionMismatchError("trajectory file version " + std::to_string(version) +
                               " (expected " + std::to_string(kTrajectoryFormatVersion) + ")");
  }
  const auto n = io::read_le<std::uint64_t>(in);
  const auto count = io::read_le<std::uint64_t>(in);
  const auto kind_raw = io::read_le<std::uint32_t>(in);
  io::read_le<std::uint32_t>(in);
  if (kind_raw > 2) throw CorruptFileError("trajectory file: unknown process kind");
  const auto kind = static_cast<ProcessKind>(kind_raw);

  std::vector<Trajectory> batch;
  batch.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    Trajectory t;
    t.meta.kind = kind;
    t.meta.index = io::read_le<std::uint64_t>(in);
    t.meta.master_seed = io::read_le<std::uint64_t>(in);
    const bool has_params = io::read_le<std::uint32_t>(in) != 0;
    io::read_le<std::uint32_t>(in);
    const double hurst = io::read_le<double>(in);
    std::array<double, 4> p{};
    for (auto& v : p) v = io::read_le<double>(in);
    if (has_params) t.meta.params = detail::unpack_params(kind, hurst, p);
    t.dt = io::read_le<double>(in);
    t.values.resize(static_cast<std::size_t>(n));
    for (auto& v : t.values) v = io::read_le<double>(in);
    batch.push_back(std::move(t));
  }
  return batch;
}

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void write_trajectory_csv_header(std::ostream& out, std::size_t width) {
  out << "index,true_H";
  for (std::size_t k = 0; k < width; ++k) out << ",v" << k;
  out << '\n';
}

inline void write_trajectory_csv_row(std::ostream& out, const Trajectory& t) {
  out << t.meta.index << ',';
  const auto h = t.meta.true_hurst();
  out << (h ? format_double(*h) : std::string("nan"));
  for (double v : t.values) out << ',' << format_double(v);
  out << '\n';
}

/// CSV: header "index,true_H,v0,...", then one row per trajectory.
inline void write_trajectories_csv(std::ostream& out, std::span<const Trajectory> batch) {
  std::size_t width = 0;
  for (const auto& t : batch) width = std::max(width, t.values.size());
  write_trajectory_csv_header(out, width);
  for (const auto& t : batch) write_trajectory_csv_row(out, t);
  if (!out) throw IoError("failed writing trajectory CSV");
}

inline void save_trajectories(const std::string& path, std::span<const Trajectory> batch,
                              bool csv) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  if (csv) write_trajectories_csv(out, batch);
  else write_trajectories_binary(out, batch);
}

inline std::vector<Trajectory> load_trajectories_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_trajectories_binary(in);
}

}  // namespace fracest
