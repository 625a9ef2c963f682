#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

#include "fracest/core/errors.hpp"

namespace fracest::fft {

using Complex = std::complex<double>;

enum class Direction { forward, backward };

namespace detail {

enum class PlanKind { c2c_forward, c2c_backward, r2c, c2r };

// FFTW's planner is not reentrant; plan execution on new arrays is. Plans are
// built once per (kind, size) with FFTW_ESTIMATE | FFTW_UNALIGNED so they are
// valid for any buffer and produce identical results on every call.
class PlanRegistry {
public:
  static PlanRegistry& instance() {
    static PlanRegistry registry;
    return registry;
  }

  fftw_plan get(PlanKind kind, std::size_t n) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int size = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::c2c_forward:
      case PlanKind::c2c_backward: {
        auto* buf = fftw_alloc_complex(n);
        plan = fftw_plan_dft_1d(size, buf, buf,
                                kind == PlanKind::c2c_forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                flags);
        fftw_free(buf);
        break;
      }
      case PlanKind::r2c: {
        auto* in = fftw_alloc_real(n);
        auto* out = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(size, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
      case PlanKind::c2r: {
        auto* in = fftw_alloc_complex(n / 2 + 1);
        auto* out = fftw_alloc_real(n);
        plan = fftw_plan_dft_c2r_1d(size, in, out, flags);
        fftw_free(in);
        fftw_free(out);
        break;
      }
    }
    if (!plan) throw NumericalError("FFTW failed to create a plan of size " + std::to_string(n));
    plans_.emplace(key, plan);
    return plan;
  }

  PlanRegistry(const PlanRegistry&) = delete;
  PlanRegistry& operator=(const PlanRegistry&) = delete;

private:
  PlanRegistry() = default;
  ~PlanRegistry() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<PlanKind, std::size_t>, fftw_plan> plans_;
};

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// In-place unnormalized DFT. Forward uses exp(-2 pi i jk / n).
inline void transform(std::span<Complex> data, Direction dir) {
  if (data.empty()) return;
  auto kind = dir == Direction::forward ? detail::PlanKind::c2c_forward
                                        : detail::PlanKind::c2c_backward;
  fftw_plan plan = detail::PlanRegistry::instance().get(kind, data.size());
  fftw_execute_dft(plan, detail::as_fftw(data.data()), detail::as_fftw(data.data()));
}

/// Forward real-to-complex DFT; returns n/2 + 1 coefficients.
inline std::vector<Complex> forward_real(std::span<const double> input) {
  const std::size_t n = input.size();
  std::vector<double> in(input.begin(), input.end());
  std::vector<Complex> out(n / 2 + 1);
  if (n == 0) return out;
  fftw_plan plan = detail::PlanRegistry::instance().get(detail::PlanKind::r2c, n);
  fftw_execute_dft_r2c(plan, in.data(), detail::as_fftw(out.data()));
  return out;
}

/// Unnormalized inverse of forward_real for a length-n real signal.
/// `spectrum` holds n/2 + 1 coefficients and is clobbered.
inline std::vector<double> backward_real(std::span<Complex> spectrum, std::size_t n) {
  std::vector<double> out(n);
  if (n == 0) return out;
  fftw_plan plan = detail::PlanRegistry::instance().get(detail::PlanKind::c2r, n);
  fftw_execute_dft_c2r(plan, detail::as_fftw(spectrum.data()), out.data());
  return out;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Linear convolution (full, length a + b - 1) through zero-padded real FFTs.
inline std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t full = a.size() + b.size() - 1;
  const std::size_t size = next_pow2(full);
  std::vector<double> pa(size, 0.0), pb(size, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  auto fa = forward_real(pa);
  const auto fb = forward_real(pb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto result = backward_real(fa, size);
  result.resize(full);
  const double norm = 1.0 / static_cast<double>(size);
  for (auto& v : result) v *= norm;
  return result;
}

}  // namespace fracest::fft
