#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fracest/neural/model.hpp"

namespace fracest::neural {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with decoupled weight decay: theta <- theta (1 - lr wd), then the
/// bias-corrected Adam update.
template <class S>
class AdamW {
public:
  AdamW(const Model<S>& model, AdamWConfig cfg) : cfg_(cfg) {
    first_ = model.zeros_like();
    second_ = model.zeros_like();
  }

  void step(Model<S>& model, const Model<S>& grad) {
    ++steps_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    const S lr = static_cast<S>(cfg_.learning_rate);
    const S decay = static_cast<S>(1.0 - cfg_.learning_rate * cfg_.weight_decay);
    const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
    const S inv_c1 = static_cast<S>(1.0 / c1), inv_sqrt_c2 = static_cast<S>(1.0 / std::sqrt(c2));
    const S eps = static_cast<S>(cfg_.epsilon);

    auto& params = model.tensors();
    const auto& grads = grad.tensors();
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k].value.array();
      const auto g = grads[k].value.array();
      auto m = first_.tensors()[k].value.array();
      auto v = second_.tensors()[k].value.array();
      m = b1 * m + (S(1) - b1) * g;
      v = b2 * v + (S(1) - b2) * g * g;
      p = p * decay - lr * (m * inv_c1) / ((v.sqrt() * inv_sqrt_c2) + eps);
    }
  }

  std::uint64_t steps() const noexcept { return steps_; }

private:
  AdamWConfig cfg_;
  Model<S> first_, second_;
  std::uint64_t steps_ = 0;
};

}  // namespace fracest::neural
