#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "fracest/detail/parallel.hpp"
#include "fracest/neural/lstm.hpp"
#include "fracest/neural/model.hpp"
#include "fracest/neural/preprocess.hpp"

namespace fracest::neural {

inline constexpr std::size_t kInferenceChunk = 128;

/// Hurst estimate of one path: forward(model, preprocess(path)).
template <class S>
double estimate(const Model<S>& model, std::span<const double> path) {
  const std::vector<double> inc = preprocess(path).values;
  return forward(model, make_batch<S>(std::span<const std::vector<double>>(&inc, 1))).front();
}

/// Estimates for many paths. Paths are grouped by length and evaluated in
/// fixed chunks of kInferenceChunk, so each result is independent of `threads`.
template <class S>
std::vector<double> estimate_batch(const Model<S>& model, std::span<const std::vector<double>> paths,
                                   unsigned threads = 1) {
  std::vector<std::vector<double>> inputs(paths.size());
  parallel_for(paths.size(), threads, [&](std::size_t i) { inputs[i] = preprocess(paths[i]).values; });

  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < inputs.size(); ++i) by_length[inputs[i].size()].push_back(i);
  std::vector<std::vector<std::size_t>> chunks;
  for (const auto& [len, members] : by_length) {
    for (std::size_t s = 0; s < members.size(); s += kInferenceChunk) {
      const auto end = std::min(members.size(), s + kInferenceChunk);
      chunks.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(s),
                          members.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }

  std::vector<double> out(paths.size());
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    std::vector<std::vector<double>> seqs;
    seqs.reserve(chunks[c].size());
    for (std::size_t i : chunks[c]) seqs.push_back(std::move(inputs[i]));
    const auto est = forward(model, make_batch<S>(seqs));
    for (std::size_t k = 0; k < chunks[c].size(); ++k) out[chunks[c][k]] = est[k];
  });
  return out;
}

}  // namespace fracest::neural
