#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/core/random.hpp"

namespace fracest::neural {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

enum class LossKind : std::uint32_t { mse = 0, mae = 1 };

inline std::string to_string(LossKind kind) { return kind == LossKind::mse ? "mse" : "mae"; }

inline LossKind parse_loss_kind(const std::string& name) {
  if (name == "mse") return LossKind::mse;
  if (name == "mae" || name == "l1") return LossKind::mae;
  throw ValidationError("unknown loss '" + name + "' (expected mse or mae)");
}

/// Stacked unidirectional LSTM over a scalar sequence, temporal mean pooling,
/// then linear(hidden -> head1) -> PReLU -> linear(head1 -> head2) -> linear(head2 -> 1).
struct Architecture {
  std::uint32_t input_dim = 1;
  std::uint32_t layers = 2;
  std::uint32_t hidden = 128;
  std::uint32_t head1 = 128;
  std::uint32_t head2 = 64;

  static Architecture reference() { return {}; }
  static Architecture tiny(std::uint32_t hidden = 8) { return {1, 2, hidden, hidden, hidden / 2}; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct TrainingMeta {
  LossKind loss = LossKind::mse;
  std::uint32_t epochs = 0;
  std::uint32_t sequence_length = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

template <class S>
struct NamedTensor {
  std::string name;
  Matrix<S> value;
};

/// All network parameters as an ordered list of named tensors. Vectors are
/// stored as single-column matrices and the PReLU slope as a 1x1 matrix.
///
/// Layout for L layers: [3l + 0] lstm.l.w_ih (4H x in), [3l + 1] lstm.l.w_hh
/// (4H x H), [3l + 2] lstm.l.bias (4H), gate order (input, forget, cell,
/// output); then head.0.weight, head.0.bias, head.prelu, head.1.weight,
/// head.1.bias, head.2.weight, head.2.bias.
template <class S>
class Model {
public:
  Model() = default;

  explicit Model(const Architecture& arch) : arch_(arch) {
    if (arch.input_dim != 1) throw ValidationError("input_dim must be 1");
    if (arch.layers < 1 || arch.hidden < 1 || arch.head1 < 1 || arch.head2 < 1) {
      throw ValidationError("architecture dimensions must be positive");
    }
    const Eigen::Index h = arch.hidden;
    for (std::uint32_t l = 0; l < arch.layers; ++l) {
      const Eigen::Index in = l == 0 ? arch.input_dim : h;
      const std::string p = "lstm." + std::to_string(l) + ".";
      tensors_.push_back({p + "w_ih", Matrix<S>::Zero(4 * h, in)});
      tensors_.push_back({p + "w_hh", Matrix<S>::Zero(4 * h, h)});
      tensors_.push_back({p + "bias", Matrix<S>::Zero(4 * h, 1)});
    }
    tensors_.push_back({"head.0.weight", Matrix<S>::Zero(arch.head1, h)});
    tensors_.push_back({"head.0.bias", Matrix<S>::Zero(arch.head1, 1)});
    tensors_.push_back({"head.prelu", Matrix<S>::Zero(1, 1)});
    tensors_.push_back({"head.1.weight", Matrix<S>::Zero(arch.head2, arch.head1)});
    tensors_.push_back({"head.1.bias", Matrix<S>::Zero(arch.head2, 1)});
    tensors_.push_back({"head.2.weight", Matrix<S>::Zero(1, arch.head2)});
    tensors_.push_back({"head.2.bias", Matrix<S>::Zero(1, 1)});
  }

  const Architecture& architecture() const noexcept { return arch_; }
  TrainingMeta& meta() noexcept { return meta_; }
  const TrainingMeta& meta() const noexcept { return meta_; }

  std::vector<NamedTensor<S>>& tensors() noexcept { return tensors_; }
  const std::vector<NamedTensor<S>>& tensors() const noexcept { return tensors_; }

  Matrix<S>& w_ih(std::size_t l) { return tensors_[3 * l].value; }
  Matrix<S>& w_hh(std::size_t l) { return tensors_[3 * l + 1].value; }
  Matrix<S>& bias(std::size_t l) { return tensors_[3 * l + 2].value; }
  const Matrix<S>& w_ih(std::size_t l) const { return tensors_[3 * l].value; }
  const Matrix<S>& w_hh(std::size_t l) const { return tensors_[3 * l + 1].value; }
  const Matrix<S>& bias(std::size_t l) const { return tensors_[3 * l + 2].value; }

  Matrix<S>& head_weight(std::size_t i) { return tensors_[head_base() + (i == 0 ? 0 : 2 * i + 1)].value; }
  Matrix<S>& head_bias(std::size_t i) { return tensors_[head_base() + (i == 0 ? 1 : 2 * i + 2)].value; }
  const Matrix<S>& head_weight(std::size_t i) const {
    return tensors_[head_base() + (i == 0 ? 0 : 2 * i + 1)].value;
  }
  const Matrix<S>& head_bias(std::size_t i) const {
    return tensors_[head_base() + (i == 0 ? 1 : 2 * i + 2)].value;
  }
  S& prelu_slope() { return tensors_[head_base() + 2].value(0, 0); }
  S prelu_slope() const { return tensors_[head_base() + 2].value(0, 0); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
    return n;
  }

  /// Zero tensors with this model's shapes (gradient accumulator).
  Model zeros_like() const {
    Model z = *this;
    for (auto& t : z.tensors_) t.value.setZero();
    return z;
  }

  template <class T>
  Model<T> cast() const {
    Model<T> out(arch_);
    out.meta() = meta_;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      out.tensors()[i].value = tensors_[i].value.template cast<T>();
    }
    return out;
  }

  bool all_finite() const {
    for (const auto& t : tensors_) {
      if (!t.value.allFinite()) return false;
    }
    return true;
  }

private:
  std::size_t head_base() const { return 3 * static_cast<std::size_t>(arch_.layers); }

  Architecture arch_{};
  TrainingMeta meta_{};
  std::vector<NamedTensor<S>> tensors_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases except the
/// forget-gate bias (+1), PReLU slope 0.25.
template <class S>
Model<S> initialize(const Architecture& arch, std::uint64_t seed) {
  Model<S> model(arch);
  RandomStream rng(derive_seed(seed, "init"));
  auto fill_uniform = [&rng](Matrix<S>& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, j) = static_cast<S>(bound * (2.0 * rng.uniform() - 1.0));
      }
    }
  };
  const Eigen::Index h = arch.hidden;
  for (std::uint32_t l = 0; l < arch.layers; ++l) {
    fill_uniform(model.w_ih(l));
    fill_uniform(model.w_hh(l));
    model.bias(l).setZero();
    model.bias(l).block(h, 0, h, 1).setConstant(S(1));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    fill_uniform(model.head_weight(i));
    model.head_bias(i).setZero();
  }
  model.prelu_slope() = S(0.25);
  return model;
}

}  // namespace fracest::neural
