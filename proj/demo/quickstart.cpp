// Generates fBm paths at a few Hurst values and compares classical estimates.
#include <iomanip>
#include <iostream>

#include "fracest/classical/estimators.hpp"
#include "fracest/generators/batch.hpp"

int main() {
  using namespace fracest;
  std::cout << std::fixed << std::setprecision(3);
  std::cout << "   H";
  for (auto kind : classical::kAllEstimators) std::cout << std::setw(10) << classical::to_string(kind);
  std::cout << '\n';
  for (double h : {0.2, 0.5, 0.8}) {
    GenerationRequest req;
    req.params = FbmParams{h};
    req.n = 1600;
    req.count = 50;
    req.master_seed = 42;
    const auto paths = generate_batch(req);
    std::cout << std::setw(4) << h;
    for (auto kind : classical::kAllEstimators) {
      double sum = 0.0;
      for (const auto& p : paths) sum += classical::estimate(kind, p.values);
      std::cout << std::setw(10) << sum / static_cast<double>(paths.size());
    }
    std::cout << '\n';
  }
}
