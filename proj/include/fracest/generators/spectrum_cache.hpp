#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "fracest/core/autocov.hpp"
#include "fracest/core/errors.hpp"
#include "fracest/detail/fft.hpp"

namespace fracest {

/// Hurst values used for generation live on a 1e-6 grid; grid index q maps
/// to H = q * 1e-6 with q in [1, 999999].
inline constexpr double kHurstGridStep = 1e-6;
inline constexpr std::int64_t kHurstGridPoints = 1'000'000;

inline std::int64_t hurst_grid_index(double hurst) {
  auto q = static_cast<std::int64_t>(std::llround(hurst / kHurstGridStep));
  if (q < 1) q = 1;
  if (q > kHurstGridPoints - 1) q = kHurstGridPoints - 1;
  return q;
}

inline double quantize_hurst(double hurst) {
  return static_cast<double>(hurst_grid_index(hurst)) * kHurstGridStep;
}

/// Eigen-decomposition of the circulant embedding of Toeplitz(gamma_H) for
/// an fGn vector of length n.
struct CirculantSpectrum {
  std::size_t length = 0;      // fGn length n
  std::size_t embedding = 0;   // circulant size M (power of two >= 2(n-1))
  std::vector<double> eigenvalues;  // clamped, all >= 0
  std::vector<double> amplitude;    // sqrt(eigenvalue / M)
};

inline constexpr double kEigenvalueTolerance = 1e-8;

inline std::size_t embedding_size(std::size_t n) {
  return std::max<std::size_t>(2, fft::next_pow2(2 * (n - 1)));
}

/// Builds the circulant spectrum. Eigenvalues in [-1e-8, 0) are clamped to
/// zero; anything more negative is an embedding failure.
inline CirculantSpectrum compute_circulant_spectrum(double hurst, std::size_t n) {
  if (n < 1) throw ValidationError("fGn length must be >= 1");
  const std::size_t m = embedding_size(n);
  const auto gamma = fgn_autocov_sequence(hurst, m / 2 + 1);

  std::vector<fft::Complex> row(m);
  for (std::size_t k = 0; k <= m / 2; ++k) row[k] = gamma[k];
  for (std::size_t k = 1; k < m / 2; ++k) row[m - k] = gamma[k];
  fft::transform(row, fft::Direction::forward);

  CirculantSpectrum spectrum;
  spectrum.length = n;
  spectrum.embedding = m;
  spectrum.eigenvalues.resize(m);
  spectrum.amplitude.resize(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lambda = row[k].real();
    if (lambda < 0.0) {
      if (lambda < -kEigenvalueTolerance) {
        throw EmbeddingError("circulant embedding has negative eigenvalue " +
                             std::to_string(lambda) + " (H=" + std::to_string(hurst) +
                             ", n=" + std::to_string(n) + ")");
      }
      lambda = 0.0;
    }
    spectrum.eigenvalues[k] = lambda;
    spectrum.amplitude[k] = std::sqrt(lambda * inv_m);
  }
  return spectrum;
}

/// Bounded LRU map (n, H grid index) -> circulant spectrum, shareable across
/// threads. Hits return the same immutable object.
class SpectrumCache {
public:
  static constexpr std::size_t kDefaultCapacity = 1024;

  explicit SpectrumCache(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ValidationError("spectrum cache capacity must be >= 1");
  }

  SpectrumCache(const SpectrumCache&) = delete;
  SpectrumCache& operator=(const SpectrumCache&) = delete;

  /// `hurst` must already be on the grid (see quantize_hurst).
  std::shared_ptr<const CirculantSpectrum> get(double hurst, std::size_t n) {
    const Key key{n, hurst_grid_index(hurst)};
    {
      std::lock_guard lock(mutex_);
      if (auto it = index_.find(key); it != index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        ++hits_;
        return it->second->second;
      }
      ++misses_;
    }
    // Computed outside the lock; a concurrent miss on the same key computes an
    // identical spectrum, and the first insertion wins.
    auto spectrum = std::make_shared<const CirculantSpectrum>(compute_circulant_spectrum(hurst, n));
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) return it->second->second;
    lru_.emplace_front(key, spectrum);
    index_.emplace(key, lru_.begin());
    if (lru_.size() > capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    return spectrum;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return lru_.size();
  }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  std::uint64_t misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
  }
  bool contains(double hurst, std::size_t n) const {
    std::lock_guard lock(mutex_);
    return index_.contains(Key{n, hurst_grid_index(hurst)});
  }

  void clear() {
    std::lock_guard lock(mutex_);
    lru_.clear();
    index_.clear();
  }

private:
  struct Key {
    std::size_t n;
    std::int64_t q;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(k.q) * 0x9e3779b97f4a7c15ULL ^
                                        static_cast<std::uint64_t>(k.n));
    }
  };
  using Entry = std::pair<Key, std::shared_ptr<const CirculantSpectrum>>;

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> lru_;
  std::unordered_map<Key, std::list<Entry>::iterator, KeyHash> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

inline SpectrumCache& default_spectrum_cache() {
  static SpectrumCache cache;
  return cache;
}

}  // namespace fracest
