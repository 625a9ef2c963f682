#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracest/core/params.hpp"
#include "fracest/core/random.hpp"
#include "fracest/core/trajectory.hpp"
#include "fracest/detail/parallel.hpp"
#include "fracest/generators/processes.hpp"

namespace fracest {

enum class HurstMode { fixed, uniform };

struct GenerationRequest {
  ProcessParams params = FbmParams{};
  std::size_t n = 1600;
  std::size_t count = 1;
  std::uint64_t master_seed = 0;
  std::uint64_t first_index = 0;  // trajectory indices are first_index + i
  HurstMode hurst_mode = HurstMode::fixed;
  double dt = 1.0;
  LfsmMesh lfsm_mesh{};
  FouScheme fou_scheme = FouScheme::euler_maruyama;
  SpectrumCache* cache = &default_spectrum_cache();
  unsigned threads = 1;  // 0 = hardware concurrency
};

/// Failures of individual trajectories, reported together with their indices.
class BatchError : public Error {
public:
  struct Failure {
    std::uint64_t index;
    std::string message;
  };

  explicit BatchError(std::vector<Failure> failures)
      : Error(summarize(failures)), failures_(std::move(failures)) {}

  const std::vector<Failure>& failures() const noexcept { return failures_; }

private:
  static std::string summarize(const std::vector<Failure>& failures) {
    std::string msg = std::to_string(failures.size()) + " trajectory generation(s) failed";
    const std::size_t shown = std::min<std::size_t>(failures.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
      msg += "; [" + std::to_string(failures[i].index) + "] " + failures[i].message;
    }
    return msg;
  }

  std::vector<Failure> failures_;
};

inline void validate_request(const GenerationRequest& req) {
  if (req.n < 2) throw ValidationError("path length n must be >= 2");
  if (req.count < 1) throw ValidationError("count must be >= 1");
  if (!(req.dt > 0.0)) throw ValidationError("dt must be > 0");
  if (req.hurst_mode == HurstMode::fixed) {
    if (kind_of(req.params) == ProcessKind::lfsm) {
      if (auto s = validate_lfsm_generation(std::get<LfsmParams>(req.params)); !s) {
        throw ValidationError(s.message);
      }
    } else {
      ensure_valid(req.params);
    }
  }
}

/// Draws H ~ U(0,1) on the generation grid from the trajectory's own stream.
inline double draw_uniform_hurst(RandomStream& stream) {
  return quantize_hurst(stream.uniform_open());
}

/// Generates trajectory `index` of a request. The result depends only on the
/// request parameters and the index.
inline Trajectory generate_one(const GenerationRequest& req, std::uint64_t index) {
  auto stream = RandomStream::for_trajectory(req.master_seed, index);
  ProcessParams params = req.params;
  if (req.hurst_mode == HurstMode::uniform) params = with_hurst(params, draw_uniform_hurst(stream));

  Trajectory traj = std::visit(
      [&](const auto& p) -> Trajectory {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FbmParams>) {
          return generate_fbm(p, req.n, req.dt, stream, req.cache);
        } else if constexpr (std::is_same_v<P, FouParams>) {
          return generate_fou(p, req.n, req.dt, stream, req.cache, req.fou_scheme);
        } else {
          return generate_lfsm(p, req.n, req.dt, stream, req.lfsm_mesh);
        }
      },
      params);
  traj.meta.master_seed = req.master_seed;
  traj.meta.index = index;
  return traj;
}

/// Output order equals index order irrespective of `threads`.
inline std::vector<Trajectory> generate_batch(const GenerationRequest& req) {
  validate_request(req);
  std::vector<Trajectory> out(req.count);
  std::vector<std::optional<std::string>> errors(req.count);
  parallel_for(req.count, req.threads, [&](std::size_t i) {
    try {
      out[i] = generate_one(req, req.first_index + i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::vector<BatchError::Failure> failures;
  for (std::size_t i = 0; i < req.count; ++i) {
    if (errors[i]) failures.push_back({req.first_index + i, *errors[i]});
  }
  if (!failures.empty()) throw BatchError(std::move(failures));
  return out;
}

}  // namespace fracest
