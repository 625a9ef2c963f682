#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>
#include <vector>

#include "fracest/classical/estimators.hpp"
#include "fracest/generators/batch.hpp"
#include "fracest/generators/processes.hpp"
#include "fracest/generators/spectrum_cache.hpp"
#include "fracest/generators/trajectory_io.hpp"
#include "fracest/stats.hpp"
#include "support.hpp"

using namespace fracest;
using Catch::Approx;

namespace {

std::vector<double> fgn_sample(double h, std::size_t n, std::uint64_t seed, std::uint64_t index,
                               SpectrumCache* cache = &default_spectrum_cache()) {
  auto s = RandomStream::for_trajectory(seed, index);
  return generate_fgn(h, n, s, cache);
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("embedding size is the next power of two of 2(n-1)") {
  CHECK(embedding_size(2) == 2);
  CHECK(embedding_size(3) == 4);
  CHECK(embedding_size(64) == 128);
  CHECK(embedding_size(65) == 128);
  CHECK(embedding_size(1600) == 4096);
}

TEST_CASE("circulant spectra are nonnegative") {
  for (double h : {0.01, 0.3, 0.5, 0.7, 0.99}) {
    for (std::size_t n : {2u, 10u, 64u, 1600u}) {
      const auto s = compute_circulant_spectrum(h, n);
      CHECK(s.embedding == embedding_size(n));
      CHECK(s.eigenvalues.size() == s.embedding);
      for (double l : s.eigenvalues) REQUIRE(l >= 0.0);
    }
  }
  // H = 0.5 gives white noise: every eigenvalue equals gamma(0) = 1.
  for (double l : compute_circulant_spectrum(0.5, 100).eigenvalues) CHECK(l == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectrum cache hits, misses and LRU eviction") {
  SpectrumCache cache(2);
  const auto a = cache.get(0.3, 100);
  const auto a2 = cache.get(0.3, 100);
  CHECK(a.get() == a2.get());
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
  cache.get(0.4, 100);
  cache.get(0.3, 100);  // refresh 0.3
  cache.get(0.5, 100);  // evicts 0.4
  CHECK(cache.size() == 2);
  CHECK(cache.contains(0.3, 100));
  CHECK_FALSE(cache.contains(0.4, 100));
  CHECK(cache.contains(0.5, 100));
  CHECK_FALSE(cache.contains(0.5, 101));
  // Values within the same 1e-6 cell share an entry.
  CHECK(cache.contains(0.5 + 2e-7, 100));
  cache.clear();
  CHECK(cache.size() == 0);
  CHECK(default_spectrum_cache().capacity() == 1024);
}

TEST_CASE("cache on and off give bit-identical fGn") {
  SpectrumCache cache;
  for (double h : {0.25, 0.5, 0.731234, 0.9876543219}) {
    const auto cached = fgn_sample(h, 500, 9, 1, &cache);
    const auto cached_again = fgn_sample(h, 500, 9, 1, &cache);
    const auto uncached = fgn_sample(h, 500, 9, 1, nullptr);
    CHECK(same_bits(cached, uncached));
    CHECK(same_bits(cached, cached_again));
  }
}

TEST_CASE("H is snapped to the 1e-6 grid") {
  CHECK(quantize_hurst(0.7) == 0.7);
  CHECK(quantize_hurst(0.12345678) == Approx(0.123457).margin(1e-15));
  CHECK(quantize_hurst(1e-9) == Approx(1e-6));
  CHECK(quantize_hurst(1.0 - 1e-9) == Approx(1.0 - 1e-6));
  CHECK(same_bits(fgn_sample(0.30000001, 64, 1, 1), fgn_sample(0.3, 64, 1, 1)));
}

TEST_CASE("fGn with H = 0.5 is white Gaussian noise") {
  const std::size_t n = 1024;
  const int reps = 10000;
  std::vector<double> lag_sum(11, 0.0);
  std::vector<double> pooled;
  pooled.reserve(reps);
  for (int r = 0; r < reps; ++r) {
    const auto x = fgn_sample(0.5, n, 21, static_cast<std::uint64_t>(r));
    pooled.push_back(x[static_cast<std::size_t>(r) % n]);
    for (std::size_t lag = 1; lag <= 10; ++lag) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += x[i] * x[i + lag];
      lag_sum[lag] += s / static_cast<double>(n - lag);
    }
  }
  for (std::size_t lag = 1; lag <= 10; ++lag) {
    const double mean = lag_sum[lag] / reps;
    const double se = 1.0 / std::sqrt(static_cast<double>(reps) * static_cast<double>(n - lag));
    CHECK(std::abs(mean) < 3.0 * se);
  }
  CHECK(stats::ks_test(pooled, stats::normal_cdf).p_value > 0.01);
}

TEST_CASE("fGn covariance matches the exact Toeplitz matrix and the Cholesky oracle") {
  const int n = 16;
  const int reps = 5000;
  for (double h : {0.2, 0.8}) {
    const auto exact = oracle::fgn_toeplitz(h, n);
    oracle::CholeskyFgn chol(h, n);
    std::mt19937_64 rng(77);
    std::vector<Eigen::VectorXd> gen, ora;
    for (int r = 0; r < reps; ++r) {
      auto x = fgn_sample(h, n, 31, static_cast<std::uint64_t>(r));
      gen.push_back(Eigen::Map<Eigen::VectorXd>(x.data(), n));
      ora.push_back(chol.sample(rng));
    }
    const auto g = oracle::check_covariance(gen, exact, 3.0);
    const auto o = oracle::check_covariance(ora, exact, 3.0);
    const int bound = oracle::binomial_upper(g.entries, 0.0027, 1e-3);
    CHECK(g.exceed <= bound);
    CHECK(o.exceed <= bound);
  }
}

TEST_CASE("fGn is deterministic per (seed, index)") {
  CHECK(same_bits(fgn_sample(0.7, 300, 5, 17), fgn_sample(0.7, 300, 5, 17)));
  CHECK_FALSE(same_bits(fgn_sample(0.7, 300, 5, 17), fgn_sample(0.7, 300, 5, 18)));
  CHECK_FALSE(same_bits(fgn_sample(0.7, 300, 5, 17), fgn_sample(0.7, 300, 6, 17)));
}

TEST_CASE("fGn rejects invalid arguments") {
  RandomStream s(1);
  CHECK_THROWS_AS(generate_fgn(0.0, 10, s), ValidationError);
  CHECK_THROWS_AS(generate_fgn(1.0, 10, s), ValidationError);
  CHECK_THROWS_AS(generate_fbm(FbmParams{0.5}, 1, 1.0, s), ValidationError);
  CHECK_THROWS_AS(generate_fbm(FbmParams{0.5}, 10, 0.0, s), ValidationError);
}

TEST_CASE("fBm paths start at zero and scale by dt^H") {
  auto s1 = RandomStream::for_trajectory(3, 0);
  auto s2 = RandomStream::for_trajectory(3, 0);
  const auto a = generate_fbm(FbmParams{0.7}, 200, 1.0, s1);
  const auto b = generate_fbm(FbmParams{0.7}, 200, 0.01, s2);
  CHECK(a.values[0] == 0.0);
  CHECK(b.values[0] == 0.0);
  CHECK(a.meta.kind == ProcessKind::fbm);
  CHECK(a.meta.true_hurst() == 0.7);
  const double c = std::pow(0.01, 0.7);
  for (std::size_t k = 1; k < 200; ++k) CHECK(b.values[k] == Approx(c * a.values[k]).epsilon(1e-12));
}

TEST_CASE("fBm endpoint variance at T = 1") {
  const std::size_t n = 257;
  const int reps = 10000;
  std::vector<double> ends;
  for (int r = 0; r < reps; ++r) {
    auto s = RandomStream::for_trajectory(41, static_cast<std::uint64_t>(r));
    ends.push_back(generate_fbm(FbmParams{0.8}, n, 1.0 / (n - 1), s).values.back());
  }
  double sq = 0.0;
  for (double v : ends) sq += v * v;
  const double var = sq / reps;  // known zero mean
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("fBm covariance at two times follows the fBm kernel") {
  // B(0.5), B(1) on a 65-point grid over [0, 1].
  const double h = 0.3;
  const int reps = 10000;
  double s11 = 0.0, s12 = 0.0, s22 = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto s = RandomStream::for_trajectory(42, static_cast<std::uint64_t>(r));
    const auto p = generate_fbm(FbmParams{h}, 65, 1.0 / 64.0, s);
    const double a = p.values[32], b = p.values[64];
    s11 += a * a;
    s12 += a * b;
    s22 += b * b;
  }
  const double c11 = oracle::fbm_cov(h, 0.5, 0.5), c12 = oracle::fbm_cov(h, 0.5, 1.0), c22 = 1.0;
  CHECK(std::abs(s11 / reps - c11) < 3.0 * std::sqrt(2.0 * c11 * c11 / reps));
  CHECK(std::abs(s12 / reps - c12) < 3.0 * std::sqrt((c11 * c22 + c12 * c12) / reps));
  CHECK(std::abs(s22 / reps - c22) < 3.0 * std::sqrt(2.0 / reps));
}

TEST_CASE("fOU with kappa = 0 is x0 + sigma * fBm from the same stream") {
  for (double h : {0.2, 0.5, 0.85}) {
    auto s1 = RandomStream::for_trajectory(8, 2);
    auto s2 = RandomStream::for_trajectory(8, 2);
    const auto fou = generate_fou(FouParams{h, 0.0, 123.0, 2.5, -1.5}, 400, 0.1, s1);
    const auto fbm = generate_fbm(FbmParams{h}, 400, 0.1, s2);
    std::vector<double> expect(400);
    for (std::size_t k = 0; k < 400; ++k) expect[k] = -1.5 + 2.5 * fbm.values[k];
    CHECK(same_bits(fou.values, expect));
  }
}

TEST_CASE("fOU sits at a fixed point when theta = x0 and sigma is tiny") {
  auto s = RandomStream::for_trajectory(8, 3);
  const auto p = generate_fou(FouParams{0.6, 1.0, 5.0, 1e-12, 5.0}, 1000, 0.01, s);
  for (double v : p.values) REQUIRE(std::abs(v - 5.0) < 1e-6);
}

TEST_CASE("fOU Euler scheme rejects kappa * dt >= 2") {
  auto s = RandomStream::for_trajectory(8, 4);
  CHECK_THROWS_AS(generate_fou(FouParams{0.5, 4.0, 0.0, 1.0, 0.0}, 10, 0.5, s), NumericalError);
  CHECK_NOTHROW(generate_fou(FouParams{0.5, 4.0, 0.0, 1.0, 0.0}, 10, 0.5, s, &default_spectrum_cache(),
                             FouScheme::exact_quadrature));
}

TEST_CASE("fOU schemes reach the OU stationary variance at H = 0.5") {
  const std::size_t n = 5000;
  const double dt = 50.0 / (n - 1);
  for (auto scheme : {FouScheme::euler_maruyama, FouScheme::exact_quadrature}) {
    double sq = 0.0;
    std::size_t count = 0;
    for (int r = 0; r < 400; ++r) {
      auto s = RandomStream::for_trajectory(55, static_cast<std::uint64_t>(r));
      const auto p = generate_fou(FouParams{0.5, 1.0, 0.0, 1.0, 0.0}, n, dt, s, &default_spectrum_cache(), scheme);
      for (std::size_t k = n / 2; k < n; k += 100) {
        sq += p.values[k] * p.values[k];
        ++count;
      }
    }
    CHECK(sq / static_cast<double>(count) == Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("lfsm rejects H = 1/alpha and bad meshes") {
  auto s = RandomStream::for_trajectory(1, 1);
  CHECK_THROWS_AS(generate_lfsm(LfsmParams{0.8, 1.25}, 100, 1.0, s), ValidationError);
  CHECK_THROWS_AS(generate_lfsm(LfsmParams{0.8, 1.5}, 100, 1.0, s, {0, 10}), ValidationError);
  CHECK_THROWS_AS(generate_lfsm(LfsmParams{0.8, 2.1}, 100, 1.0, s), ValidationError);
  CHECK_NOTHROW(generate_lfsm(LfsmParams{0.7, 2.0}, 100, 1.0, s, {20, 8}));
}

TEST_CASE("lfsm is deterministic and starts at zero") {
  auto s1 = RandomStream::for_trajectory(2, 5);
  auto s2 = RandomStream::for_trajectory(2, 5);
  const auto a = generate_lfsm(LfsmParams{0.8, 1.5}, 300, 1.0, s1, {100, 32});
  const auto b = generate_lfsm(LfsmParams{0.8, 1.5}, 300, 1.0, s2, {100, 32});
  CHECK(a.values[0] == 0.0);
  CHECK(same_bits(a.values, b.values));
  CHECK(a.meta.kind == ProcessKind::lfsm);
}

TEST_CASE("lfsm kernel sum matches a direct evaluation") {
  // Small mesh so the O(n M m) direct sum stays cheap.
  const LfsmParams p{0.8, 1.6, 1.3};
  const LfsmMesh mesh{5, 4};
  const std::size_t n = 12;
  auto s1 = RandomStream::for_trajectory(6, 0);
  const auto path = generate_lfsm(p, n, 1.0, s1, mesh);

  auto s2 = RandomStream::for_trajectory(6, 0);
  const std::size_t m = mesh.refinement, big_m = mesh.truncation;
  std::vector<double> z(m * (n - 2 + big_m));
  for (auto& v : z) v = s2.symmetric_stable(p.alpha);
  const double d = p.hurst - 1.0 / p.alpha;
  double level = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    // Increment k ends at grid point g = m k; innovations are indexed from m(1 - M).
    double x = 0.0;
    for (std::size_t j = 1; j <= m * big_m; ++j) {
      const double u = static_cast<double>(j) / static_cast<double>(m);
      const double f = std::pow(u, d) - (u > 1.0 ? std::pow(u - 1.0, d) : 0.0);
      const std::size_t idx = m * (k - 1 + big_m) - j;
      x += f * z[idx];
    }
    level += p.scale * std::pow(1.0 / static_cast<double>(m), 1.0 / p.alpha) * x;
    CHECK(path.values[k] == Approx(level).epsilon(1e-9).margin(1e-9));
  }
}

TEST_CASE("lfsm at alpha = 2 is Gaussian with the right Hurst exponent") {
  std::vector<double> pooled, estimates;
  for (int r = 0; r < 40; ++r) {
    auto s = RandomStream::for_trajectory(71, static_cast<std::uint64_t>(r));
    const auto p = generate_lfsm(LfsmParams{0.7, 2.0}, 800, 1.0, s, {200, 32});
    const auto inc = std::vector<double>{p.values[400] - p.values[399]};
    pooled.push_back(inc[0]);
    estimates.push_back(classical::higuchi(p.values));
  }
  const double sd = std::sqrt(stats::variance(pooled));
  for (auto& v : pooled) v /= sd;
  CHECK(stats::ks_test(pooled, stats::normal_cdf).p_value > 0.01);
  CHECK(stats::mean(estimates) == Approx(0.7).margin(0.05));
}

TEST_CASE("batch output is independent of thread count") {
  GenerationRequest req;
  req.params = FbmParams{0.6};
  req.n = 300;
  req.count = 3;
  req.master_seed = 4;
  req.threads = 1;
  const auto serial = generate_batch(req);
  req.threads = 3;
  const auto parallel = generate_batch(req);
  REQUIRE(serial.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(serial[i].meta.index == i);
    CHECK(same_bits(serial[i].values, parallel[i].values));
  }
  // Partitioning does not matter either.
  req.first_index = 2;
  req.count = 1;
  CHECK(same_bits(generate_batch(req)[0].values, serial[2].values));
}

TEST_CASE("uniform-H batches draw H uniformly per path") {
  GenerationRequest req;
  req.n = 2;
  req.count = 10000;
  req.master_seed = 5;
  req.hurst_mode = HurstMode::uniform;
  req.threads = 2;
  std::vector<double> hs;
  for (const auto& t : generate_batch(req)) hs.push_back(*t.meta.true_hurst());
  CHECK(stats::ks_test(hs, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.01);
}

TEST_CASE("batch failures are aggregated with their indices") {
  GenerationRequest req;
  req.params = FouParams{0.5, 10.0, 0.0, 1.0, 0.0};
  req.hurst_mode = HurstMode::uniform;  // skips up-front validation of the fixed H
  req.n = 10;
  req.count = 4;
  req.dt = 0.5;
  try {
    generate_batch(req);
    FAIL("expected BatchError");
  } catch (const BatchError& e) {
    REQUIRE(e.failures().size() == 4);
    CHECK(e.failures()[3].index == 3);
  }
  req.hurst_mode = HurstMode::fixed;
  req.params = FbmParams{1.2};
  CHECK_THROWS_AS(generate_batch(req), ValidationError);
}

TEST_CASE("binary trajectory files round-trip bit-exactly") {
  GenerationRequest req;
  req.params = FouParams{0.5, 0.7, 1.0, 0.3, 2.0};
  req.hurst_mode = HurstMode::uniform;
  req.n = 50;
  req.count = 5;
  req.master_seed = 6;
  req.dt = 0.1;
  const auto batch = generate_batch(req);
  std::stringstream buf;
  write_trajectories_binary(buf, batch);
  const auto bytes = buf.str();
  std::istringstream in(bytes);
  const auto back = read_trajectories_binary(in);
  REQUIRE(back.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(back[i] == batch[i]);
    CHECK(same_bits(back[i].values, batch[i].values));
  }
  std::stringstream again;
  write_trajectories_binary(again, back);
  CHECK(again.str() == bytes);

  SECTION("truncation is a corrupt file") {
    std::istringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_trajectories_binary(cut), CorruptFileError);
  }
  SECTION("bad magic is a corrupt file") {
    auto bad = bytes;
    bad[0] = 'X';
    std::istringstream b(bad);
    CHECK_THROWS_AS(read_trajectories_binary(b), CorruptFileError);
  }
  SECTION("other versions are refused") {
    auto bad = bytes;
    bad[4] = 2;
    std::istringstream b(bad);
    CHECK_THROWS_AS(read_trajectories_binary(b), VersionMismatchError);
  }
}

TEST_CASE("lfsm parameters survive the binary format") {
  auto s = RandomStream::for_trajectory(1, 0);
  auto t = generate_lfsm(LfsmParams{0.3, 1.2, 2.0}, 20, 1.0, s, {10, 4});
  std::vector<Trajectory> batch{t};
  std::stringstream buf;
  write_trajectories_binary(buf, batch);
  CHECK(read_trajectories_binary(buf)[0] == t);
}

TEST_CASE("trajectory CSV layout") {
  Trajectory a;
  a.values = {0.0, 0.5, -0.25};
  a.meta.params = FbmParams{0.3};
  a.meta.index = 4;
  Trajectory b;
  b.values = {1.0, 2.0, 3.0};
  b.meta.index = 5;
  std::vector<Trajectory> batch{a, b};
  std::ostringstream out;
  write_trajectories_csv(out, batch);
  CHECK(out.str() == "index,true_H,v0,v1,v2\n4,0.3,0,0.5,-0.25\n5,nan,1,2,3\n");
}
