// Writes the synthetic capacity-loss series bundled in data/.
//
// The series used in the battery application is not published, so this is a
// stand-in with the same shape: 168 cycles of capacity loss (fraction of the
// initial capacity) rising roughly linearly to the 30% end-of-life threshold,
// with fBm (H = 0.8) fluctuations whose cycle-to-cycle increments have a
// standard deviation of 0.4% of capacity (larger than the 0.18% mean fade per
// cycle, as in measured capacity curves), plus 0.05% measurement noise.
// Parameters are fixed here and were not tuned toward any published estimate.
#include <fstream>
#include <iomanip>
#include <iostream>

#include "fracest/generators/processes.hpp"
#include "fracest/generators/trajectory_io.hpp"

int main(int argc, char** argv) {
  using namespace fracest;
  const std::string out = argc > 1 ? argv[1] : "battery_capacity_reconstructed.csv";
  constexpr std::size_t cycles = 168;
  auto stream = RandomStream::for_trajectory(derive_seed(2023, "battery"), 0);
  const auto fbm = generate_fbm(FbmParams{0.8}, cycles, 1.0, stream);
  const double scale = 0.004;  // fBm with unit step has unit-variance increments

  std::ofstream f(out);
  f << "capacity_loss\n";
  for (std::size_t k = 0; k < cycles; ++k) {
    const double trend = 0.30 * static_cast<double>(k) / static_cast<double>(cycles - 1);
    const double loss = trend + scale * fbm.values[k] + 0.0005 * stream.normal();
    f << std::setprecision(6) << std::fixed << loss << '\n';
  }
  std::cout << "wrote " << cycles << " cycles to " << out << '\n';
}
