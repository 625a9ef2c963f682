// Writes a few fOU paths with different Hurst values to CSV for plotting.
#include <fstream>
#include <iostream>
#include <vector>

#include "fracest/generators/batch.hpp"
#include "fracest/generators/trajectory_io.hpp"

int main(int argc, char** argv) {
  using namespace fracest;
  const std::string out = argc > 1 ? argv[1] : "fou_paths.csv";
  std::vector<Trajectory> paths;
  std::uint64_t index = 0;
  for (double h : {0.3, 0.5, 0.7, 0.9}) {
    auto stream = RandomStream::for_trajectory(11, index);
    auto t = generate_fou(FouParams{h, 0.5, 1.0, 0.4, 0.0}, 1000, 0.05, stream);
    t.meta.index = index++;
    paths.push_back(std::move(t));
  }
  std::ofstream f(out);
  write_trajectories_csv(f, paths);
  std::cout << "wrote " << paths.size() << " fOU paths to " << out << '\n';
}
