#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "fracest/core/errors.hpp"

namespace fracest {

enum class ProcessKind : std::uint32_t { fbm = 0, fou = 1, lfsm = 2 };

inline std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::fbm: return "fbm";
    case ProcessKind::fou: return "fou";
    case ProcessKind::lfsm: return "lfsm";
  }
  return "unknown";
}

inline ProcessKind parse_process_kind(std::string_view name) {
  if (name == "fbm") return ProcessKind::fbm;
  if (name == "fou") return ProcessKind::fou;
  if (name == "lfsm") return ProcessKind::lfsm;
  throw ValidationError("unknown process kind '" + std::string(name) + "'");
}

struct FbmParams {
  double hurst = 0.5;

  friend bool operator==(const FbmParams&, const FbmParams&) = default;
};

// Fractional Ornstein-Uhlenbeck: dX = kappa (theta - X) dt + sigma dB_H.
// kappa == 0 is admitted as the drift-free limit (X = x0 + sigma B_H).
struct FouParams {
  double hurst = 0.5;
  double kappa = 1.0;
  double theta = 0.0;
  double sigma = 1.0;
  double x0 = 0.0;

  friend bool operator==(const FouParams&, const FouParams&) = default;
};

// Linear fractional stable motion driven by a symmetric alpha-stable measure.
struct LfsmParams {
  double hurst = 0.5;
  double alpha = 1.5;
  double scale = 1.0;

  friend bool operator==(const LfsmParams&, const LfsmParams&) = default;
};

using ProcessParams = std::variant<FbmParams, FouParams, LfsmParams>;

inline ProcessKind kind_of(const ProcessParams& params) {
  return static_cast<ProcessKind>(params.index());
}

inline double hurst_of(const ProcessParams& params) {
  return std::visit([](const auto& p) { return p.hurst; }, params);
}

inline ProcessParams with_hurst(ProcessParams params, double hurst) {
  std::visit([hurst](auto& p) { p.hurst = hurst; }, params);
  return params;
}

/// Outcome of validate(): empty message means the parameters are admissible.
struct Status {
  std::string message;

  static Status ok() { return {}; }
  static Status error(std::string msg) { return {std::move(msg)}; }

  bool is_ok() const noexcept { return message.empty(); }
  explicit operator bool() const noexcept { return is_ok(); }
};

namespace detail {

inline bool hurst_in_range(double h) { return std::isfinite(h) && h > 0.0 && h < 1.0; }

inline Status check(const FbmParams& p) {
  if (!hurst_in_range(p.hurst)) return Status::error("hurst out of (0,1)");
  return Status::ok();
}

inline Status check(const FouParams& p) {
  if (!hurst_in_range(p.hurst)) return Status::error("hurst out of (0,1)");
  if (!std::isfinite(p.kappa) || p.kappa < 0.0) return Status::error("kappa must be >= 0");
  if (!std::isfinite(p.theta)) return Status::error("theta must be finite");
  if (!std::isfinite(p.sigma) || p.sigma <= 0.0) return Status::error("sigma must be > 0");
  if (!std::isfinite(p.x0)) return Status::error("x0 must be finite");
  return Status::ok();
}

inline Status check_lfsm(const LfsmParams& p, double alpha_max, bool alpha_max_inclusive) {
  if (!hurst_in_range(p.hurst)) return Status::error("hurst out of (0,1)");
  const bool alpha_ok = std::isfinite(p.alpha) && p.alpha > 0.0 &&
                        (alpha_max_inclusive ? p.alpha <= alpha_max : p.alpha < alpha_max);
  if (!alpha_ok) return Status::error(alpha_max_inclusive ? "alpha out of (0,2]" : "alpha out of (0,2)");
  if (!std::isfinite(p.scale) || p.scale <= 0.0) return Status::error("scale must be > 0");
  if (std::abs(p.hurst - 1.0 / p.alpha) < 1e-12) return Status::error("hurst equals 1/alpha");
  return Status::ok();
}

inline Status check(const LfsmParams& p) { return check_lfsm(p, 2.0, false); }

}  // namespace detail

/// Accepts iff every invariant of the parameter type holds; otherwise names
/// the first violated one.
inline Status validate(const ProcessParams& params) {
  return std::visit([](const auto& p) { return detail::check(p); }, params);
}

inline void ensure_valid(const ProcessParams& params) {
  if (auto status = validate(params); !status) throw ValidationError(status.message);
}

}  // namespace fracest
