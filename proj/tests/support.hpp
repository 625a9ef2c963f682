#pragma once

// Independent reference implementations used as test oracles.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fracest/core/random.hpp"

namespace oracle {

/// fGn autocovariance written out directly from fBm's covariance:
/// Cov(B(k+1) - B(k), B(1) - B(0)).
inline double fbm_cov(double h, double t, double s) {
  return 0.5 * (std::pow(std::abs(t), 2 * h) + std::pow(std::abs(s), 2 * h) - std::pow(std::abs(t - s), 2 * h));
}

inline double fgn_cov(double h, int k) {
  const double t = k + 1.0, s = 1.0;
  return fbm_cov(h, t, s) - fbm_cov(h, t, 0.0) - fbm_cov(h, k, s) + fbm_cov(h, k, 0.0);
}

inline Eigen::MatrixXd fgn_toeplitz(double h, int n) {
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) = fgn_cov(h, std::abs(i - j));
  }
  return c;
}

/// Brute-force fGn sampler: Cholesky factor of the exact covariance times
/// i.i.d. normals from std::normal_distribution.
class CholeskyFgn {
public:
  CholeskyFgn(double h, int n) : factor_(Eigen::LLT<Eigen::MatrixXd>(fgn_toeplitz(h, n)).matrixL()), n_(n) {}

  template <class Rng>
  Eigen::VectorXd sample(Rng& rng) {
    Eigen::VectorXd z(n_);
    for (int i = 0; i < n_; ++i) z(i) = normal_(rng);
    return factor_ * z;
  }

private:
  Eigen::MatrixXd factor_;
  int n_;
  std::normal_distribution<double> normal_;
};

/// Sample covariance (about the known zero mean) and the standard error of
/// each entry: Var(X_i X_j) = c_ii c_jj + c_ij^2 for a zero-mean Gaussian.
struct CovarianceCheck {
  int exceed = 0;
  int entries = 0;
  double worst_z = 0.0;
};

inline CovarianceCheck check_covariance(const std::vector<Eigen::VectorXd>& samples, const Eigen::MatrixXd& exact,
                                        double bands) {
  const int n = static_cast<int>(exact.rows());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (const auto& x : samples) acc.noalias() += x * x.transpose();
  acc /= static_cast<double>(samples.size());
  CovarianceCheck r;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double se =
          std::sqrt((exact(i, i) * exact(j, j) + exact(i, j) * exact(i, j)) / static_cast<double>(samples.size()));
      const double z = std::abs(acc(i, j) - exact(i, j)) / se;
      r.worst_z = std::max(r.worst_z, z);
      r.exceed += z > bands;
      ++r.entries;
    }
  }
  return r;
}

/// Two-sided normal tail probability.
inline double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

/// Smallest count k with P(Binomial(n, p) > k) < alpha, from the exact pmf.
inline int binomial_upper(int n, double p, double alpha) {
  double pmf = std::pow(1.0 - p, n), cdf = pmf;
  int k = 0;
  while (1.0 - cdf >= alpha && k < n) {
    pmf *= static_cast<double>(n - k) / static_cast<double>(k + 1) * p / (1.0 - p);
    cdf += pmf;
    ++k;
  }
  return k;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fracest_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
