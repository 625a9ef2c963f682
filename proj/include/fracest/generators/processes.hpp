#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/core/params.hpp"
#include "fracest/core/random.hpp"
#include "fracest/core/trajectory.hpp"
#include "fracest/detail/fft.hpp"
#include "fracest/generators/spectrum_cache.hpp"

namespace fracest {

/// Exact unit-spaced fractional Gaussian noise of length n by circulant
/// embedding. H is snapped to the 1e-6 grid, so cached and uncached calls
/// agree bit for bit. Pass cache = nullptr to bypass caching.
inline std::vector<double> generate_fgn(double hurst, std::size_t n, RandomStream& stream,
                                        SpectrumCache* cache = &default_spectrum_cache()) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ValidationError("hurst out of (0,1)");
  if (n < 1) throw ValidationError("fGn length must be >= 1");
  const double h = quantize_hurst(hurst);

  std::shared_ptr<const CirculantSpectrum> spectrum;
  if (cache) {
    spectrum = cache->get(h, n);
  } else {
    spectrum = std::make_shared<const CirculantSpectrum>(compute_circulant_spectrum(h, n));
  }

  const std::size_t m = spectrum->embedding;
  std::vector<fft::Complex> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double re = stream.normal();
    const double im = stream.normal();
    w[k] = spectrum->amplitude[k] * fft::Complex(re, im);
  }
  fft::transform(w, fft::Direction::forward);

  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = w[k].real();
  return out;
}

namespace detail {

/// values[0] = 0, values[k] = dt^H * sum_{i<k} increments[i].
inline std::vector<double> integrate_scaled(std::span<const double> increments, double scale) {
  std::vector<double> values(increments.size() + 1);
  values[0] = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < increments.size(); ++k) {
    sum += increments[k];
    values[k + 1] = scale * sum;
  }
  return values;
}

inline void require_path_args(std::size_t n, double dt) {
  if (n < 2) throw ValidationError("path length n must be >= 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be > 0");
}

inline TrajectoryMeta make_meta(ProcessParams params) {
  TrajectoryMeta meta;
  meta.kind = kind_of(params);
  meta.params = params;
  return meta;
}

}  // namespace detail

/// fBm on an n-point grid with spacing dt, starting at 0.
inline Trajectory generate_fbm(const FbmParams& params, std::size_t n, double dt,
                               RandomStream& stream,
                               SpectrumCache* cache = &default_spectrum_cache()) {
  ensure_valid(params);
  detail::require_path_args(n, dt);
  FbmParams snapped{quantize_hurst(params.hurst)};
  const auto fgn = generate_fgn(snapped.hurst, n - 1, stream, cache);

  Trajectory traj;
  traj.dt = dt;
  traj.values = detail::integrate_scaled(fgn, std::pow(dt, snapped.hurst));
  traj.meta = detail::make_meta(snapped);
  return traj;
}

enum class FouScheme {
  euler_maruyama,     // X[k+1] = X[k] + kappa (theta - X[k]) dt + sigma dB[k]
  exact_quadrature,   // X[k+1] = theta + e^{-kappa dt} (X[k] - theta + sigma dB[k])
};

/// fOU driven by exact fGn increments. kappa == 0 returns x0 + sigma * fBm
/// built from the same stream, bit for bit.
inline Trajectory generate_fou(const FouParams& params, std::size_t n, double dt,
                               RandomStream& stream,
                               SpectrumCache* cache = &default_spectrum_cache(),
                               FouScheme scheme = FouScheme::euler_maruyama) {
  ensure_valid(params);
  detail::require_path_args(n, dt);
  if (scheme == FouScheme::euler_maruyama && params.kappa * dt >= 2.0) {
    throw NumericalError("unstable fOU discretization: kappa * dt = " +
                         std::to_string(params.kappa * dt) + " >= 2");
  }
  FouParams snapped = params;
  snapped.hurst = quantize_hurst(params.hurst);
  const auto fgn = generate_fgn(snapped.hurst, n - 1, stream, cache);
  const double dt_h = std::pow(dt, snapped.hurst);

  Trajectory traj;
  traj.dt = dt;
  traj.meta = detail::make_meta(snapped);

  if (params.kappa == 0.0) {
    auto fbm = detail::integrate_scaled(fgn, dt_h);
    traj.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) traj.values[k] = params.x0 + params.sigma * fbm[k];
    return traj;
  }

  traj.values.resize(n);
  traj.values[0] = params.x0;
  const double noise_scale = params.sigma * dt_h;
  if (scheme == FouScheme::euler_maruyama) {
    const double drift = params.kappa * dt;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double x = traj.values[k];
      traj.values[k + 1] = x + drift * (params.theta - x) + noise_scale * fgn[k];
    }
  } else {
    const double decay = std::exp(-params.kappa * dt);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double x = traj.values[k];
      traj.values[k + 1] = params.theta + decay * (x - params.theta + noise_scale * fgn[k]);
    }
  }
  return traj;
}

/// Riemann-sum discretization of the lfsm moving-average integral.
struct LfsmMesh {
  std::size_t truncation = 600;  // kernel length in time units into the past
  std::size_t refinement = 256;  // mesh points per unit
};

/// Generation precondition: like validate(LfsmParams) except that alpha = 2,
/// the Gaussian endpoint of the stable family, is admitted.
inline Status validate_lfsm_generation(const LfsmParams& params) {
  return detail::check_lfsm(params, 2.0, true);
}

/// lfsm increments on the unit grid are
///   X_k = m^{-1/alpha} sum_{j=1}^{mM} f(j/m) Z_{km-j},  f(u) = u^d - (u-1)_+^d,
/// with d = H - 1/alpha and Z i.i.d. standard symmetric alpha-stable. The sum is
/// a linear convolution evaluated by FFT. Physical spacing dt is applied by
/// H-self-similarity.
inline Trajectory generate_lfsm(const LfsmParams& params, std::size_t n, double dt,
                                RandomStream& stream, const LfsmMesh& mesh = {}) {
  if (auto status = validate_lfsm_generation(params); !status) throw ValidationError(status.message);
  detail::require_path_args(n, dt);
  if (mesh.truncation < 1 || mesh.refinement < 1) {
    throw ValidationError("lfsm mesh requires truncation >= 1 and refinement >= 1");
  }

  const std::size_t m = mesh.refinement;
  const std::size_t kernel_len = m * mesh.truncation;
  const std::size_t steps = n - 1;
  const double d = params.hurst - 1.0 / params.alpha;
  const double inv_m = 1.0 / static_cast<double>(m);

  std::vector<double> kernel(kernel_len);
  for (std::size_t j = 1; j <= kernel_len; ++j) {
    const double u = static_cast<double>(j) * inv_m;
    const double tail = u > 1.0 ? std::pow(u - 1.0, d) : 0.0;
    kernel[j - 1] = std::pow(u, d) - tail;
  }

  // Innovation Z_g for grid index g = m(1 - M) + i.
  const std::size_t innovations_len = m * (steps - 1 + mesh.truncation);
  std::vector<double> z(innovations_len);
  for (auto& v : z) v = stream.symmetric_stable(params.alpha);

  const auto conv = fft::convolve(kernel, z);
  const double scale =
      params.scale * std::pow(inv_m, 1.0 / params.alpha) * std::pow(dt, params.hurst);

  Trajectory traj;
  traj.dt = dt;
  traj.meta = detail::make_meta(params);
  traj.values.resize(n);
  traj.values[0] = 0.0;
  double sum = 0.0;
  for (std::size_t k = 1; k <= steps; ++k) {
    sum += conv[m * (k - 1 + mesh.truncation) - 1];
    traj.values[k] = scale * sum;
  }
  return traj;
}

}  // namespace fracest
