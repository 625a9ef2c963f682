#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/neural/model.hpp"

namespace fracest::neural {

/// B equal-length scalar sequences of T steps, laid out time-major: column
/// t * B + b of `inputs` is step t of sequence b.
template <class S>
struct Batch {
  Eigen::Index steps = 0;
  Eigen::Index size = 0;
  Matrix<S> inputs;
};

template <class S>
Batch<S> make_batch(std::span<const std::vector<double>> sequences) {
  if (sequences.empty()) throw ValidationError("empty batch");
  const std::size_t t_len = sequences.front().size();
  if (t_len == 0) throw ValidationError("empty sequence in batch");
  Batch<S> batch;
  batch.steps = static_cast<Eigen::Index>(t_len);
  batch.size = static_cast<Eigen::Index>(sequences.size());
  batch.inputs.resize(1, batch.steps * batch.size);
  for (std::size_t b = 0; b < sequences.size(); ++b) {
    if (sequences[b].size() != t_len) throw ValidationError("batch sequences must share one length");
    for (std::size_t t = 0; t < t_len; ++t) {
      batch.inputs(0, static_cast<Eigen::Index>(t * sequences.size() + b)) =
          static_cast<S>(sequences[b][t]);
    }
  }
  return batch;
}

template <class S>
struct LayerTrace {
  Matrix<S> gates;       // 4H x TB, post-activation (i, f, g, o)
  Matrix<S> cells;       // H x TB
  Matrix<S> tanh_cells;  // H x TB
  Matrix<S> hidden;      // H x TB
};

/// Activations retained by the training forward pass, plus scratch buffers
/// reused across steps.
template <class S>
struct Workspace {
  std::vector<LayerTrace<S>> layers;
  Matrix<S> pooled, z0, a0, z1, output;
  Matrix<S> recurrent, d_gates, d_hidden, d_below, dh_next, dc_next;
};

namespace detail {

template <class Derived>
void sigmoid_inplace(Eigen::MatrixBase<Derived>& m) {
  using S = typename Derived::Scalar;
  m.derived().array() = S(0.5) + S(0.5) * (S(0.5) * m.derived().array()).tanh();
}

template <class Derived>
void tanh_inplace(Eigen::MatrixBase<Derived>& m) {
  m.derived().array() = m.derived().array().tanh();
}

/// Applies gate nonlinearities to one 4H x B block and advances (h, c).
template <class S, class Gates, class CPrev, class COut, class TanhOut, class HOut>
void lstm_cell(Eigen::MatrixBase<Gates>& gates, Eigen::Index h, const CPrev* c_prev,
               Eigen::MatrixBase<COut>& c_out, Eigen::MatrixBase<TanhOut>& tanh_out,
               Eigen::MatrixBase<HOut>& h_out) {
  auto if_gates = gates.derived().topRows(2 * h);
  sigmoid_inplace(if_gates);
  auto g_gate = gates.derived().middleRows(2 * h, h);
  tanh_inplace(g_gate);
  auto o_gate = gates.derived().bottomRows(h);
  sigmoid_inplace(o_gate);

  const auto i = gates.derived().topRows(h).array();
  const auto f = gates.derived().middleRows(h, h).array();
  const auto g = gates.derived().middleRows(2 * h, h).array();
  const auto o = gates.derived().bottomRows(h).array();
  if (c_prev) {
    c_out.derived().array() = f * c_prev->array() + i * g;
  } else {
    c_out.derived().array() = i * g;
  }
  tanh_out.derived().array() = c_out.derived().array().tanh();
  h_out.derived().array() = o * tanh_out.derived().array();
}

template <class S>
void layer_forward(const Model<S>& model, std::size_t l, const Matrix<S>& input, Eigen::Index steps,
                   Eigen::Index batch, LayerTrace<S>& tr, Matrix<S>& recurrent) {
  const Eigen::Index h = model.architecture().hidden;
  const auto& w_hh = model.w_hh(l);
  tr.gates.noalias() = model.w_ih(l) * input;
  tr.gates.colwise() += model.bias(l).col(0);
  tr.cells.resize(h, steps * batch);
  tr.tanh_cells.resize(h, steps * batch);
  tr.hidden.resize(h, steps * batch);
  recurrent.resize(4 * h, batch);

  for (Eigen::Index t = 0; t < steps; ++t) {
    auto gates = tr.gates.middleCols(t * batch, batch);
    auto c = tr.cells.middleCols(t * batch, batch);
    auto tc = tr.tanh_cells.middleCols(t * batch, batch);
    auto hid = tr.hidden.middleCols(t * batch, batch);
    if (t > 0) {
      recurrent.noalias() = w_hh * tr.hidden.middleCols((t - 1) * batch, batch);
      gates += recurrent;
      const auto c_prev = tr.cells.middleCols((t - 1) * batch, batch);
      lstm_cell<S>(gates, h, &c_prev, c, tc, hid);
    } else {
      lstm_cell<S, decltype(gates), decltype(c)>(gates, h, nullptr, c, tc, hid);
    }
  }
}

template <class S>
void head_forward(const Model<S>& model, const Matrix<S>& pooled, Matrix<S>& z0, Matrix<S>& a0,
                  Matrix<S>& z1, Matrix<S>& out) {
  z0.noalias() = model.head_weight(0) * pooled;
  z0.colwise() += model.head_bias(0).col(0);
  const S slope = model.prelu_slope();
  a0 = z0.unaryExpr([slope](S v) { return v > S(0) ? v : slope * v; });
  z1.noalias() = model.head_weight(1) * a0;
  z1.colwise() += model.head_bias(1).col(0);
  out.noalias() = model.head_weight(2) * z1;
  out.colwise() += model.head_bias(2).col(0);
}

template <class S>
void check_finite_output(const Matrix<S>& out) {
  if (!out.allFinite()) throw NumericalError("non-finite activation in forward pass");
}

}  // namespace detail

/// Training forward pass; keeps every activation needed by backward().
/// Returns the 1 x B prediction row.
template <class S>
const Matrix<S>& forward_train(const Model<S>& model, const Batch<S>& batch, Workspace<S>& ws) {
  const auto& arch = model.architecture();
  const Eigen::Index steps = batch.steps, size = batch.size;
  ws.layers.resize(arch.layers);
  for (std::size_t l = 0; l < arch.layers; ++l) {
    const Matrix<S>& input = l == 0 ? batch.inputs : ws.layers[l - 1].hidden;
    detail::layer_forward(model, l, input, steps, size, ws.layers[l], ws.recurrent);
  }
  const auto& top = ws.layers.back().hidden;
  ws.pooled = top.middleCols(0, size);
  for (Eigen::Index t = 1; t < steps; ++t) ws.pooled += top.middleCols(t * size, size);
  ws.pooled *= S(1) / static_cast<S>(steps);
  detail::head_forward(model, ws.pooled, ws.z0, ws.a0, ws.z1, ws.output);
  detail::check_finite_output(ws.output);
  return ws.output;
}

/// Loss over a batch (mean over sequences) and dLoss/dPrediction.
template <class S>
S loss_and_output_grad(const Matrix<S>& predictions, std::span<const double> targets,
                       LossKind kind, std::type_identity_t<Matrix<S>>* d_output) {
  const Eigen::Index b = predictions.cols();
  if (static_cast<std::size_t>(b) != targets.size()) throw ValidationError("target count mismatch");
  if (b == 0) throw ValidationError("empty batch");
  double loss = 0.0;
  if (d_output) d_output->resize(1, b);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double diff = static_cast<double>(predictions(0, j)) - targets[static_cast<std::size_t>(j)];
    if (kind == LossKind::mse) {
      loss += diff * diff;
      if (d_output) (*d_output)(0, j) = static_cast<S>(2.0 * diff * inv_b);
    } else {
      loss += std::abs(diff);
      if (d_output) (*d_output)(0, j) = static_cast<S>((diff > 0.0) - (diff < 0.0)) * static_cast<S>(inv_b);
    }
  }
  return static_cast<S>(loss * inv_b);
}

/// Reverse-mode pass for the activations stored in `ws` by forward_train.
/// Overwrites `grad` (shaped like the model) with dLoss/dParameters.
template <class S>
void backward(const Model<S>& model, const Batch<S>& batch, Workspace<S>& ws,
              const Matrix<S>& d_output, Model<S>& grad) {
  const auto& arch = model.architecture();
  const Eigen::Index h = arch.hidden, steps = batch.steps, size = batch.size;

  // Head.
  grad.head_weight(2).noalias() = d_output * ws.z1.transpose();
  grad.head_bias(2) = d_output.rowwise().sum();
  Matrix<S> d_z1 = model.head_weight(2).transpose() * d_output;
  grad.head_weight(1).noalias() = d_z1 * ws.a0.transpose();
  grad.head_bias(1) = d_z1.rowwise().sum();
  Matrix<S> d_a0 = model.head_weight(1).transpose() * d_z1;
  const S slope = model.prelu_slope();
  S d_slope(0);
  Matrix<S> d_z0(d_a0.rows(), d_a0.cols());
  for (Eigen::Index j = 0; j < d_a0.cols(); ++j) {
    for (Eigen::Index i = 0; i < d_a0.rows(); ++i) {
      const S z = ws.z0(i, j);
      if (z > S(0)) {
        d_z0(i, j) = d_a0(i, j);
      } else {
        d_z0(i, j) = slope * d_a0(i, j);
        d_slope += z * d_a0(i, j);
      }
    }
  }
  grad.prelu_slope() = d_slope;
  grad.head_weight(0).noalias() = d_z0 * ws.pooled.transpose();
  grad.head_bias(0) = d_z0.rowwise().sum();
  Matrix<S> d_pooled = model.head_weight(0).transpose() * d_z0;
  d_pooled *= S(1) / static_cast<S>(steps);

  // Mean pooling spreads the gradient evenly over time.
  ws.d_hidden.resize(h, steps * size);
  for (Eigen::Index t = 0; t < steps; ++t) ws.d_hidden.middleCols(t * size, size) = d_pooled;

  for (std::size_t li = arch.layers; li-- > 0;) {
    const LayerTrace<S>& tr = ws.layers[li];
    const Matrix<S>& input = li == 0 ? batch.inputs : ws.layers[li - 1].hidden;
    const auto& w_hh = model.w_hh(li);
    ws.d_gates.resize(4 * h, steps * size);
    ws.dh_next.setZero(h, size);
    ws.dc_next.setZero(h, size);

    for (Eigen::Index t = steps; t-- > 0;) {
      const Eigen::Index col = t * size;
      const auto gates = tr.gates.middleCols(col, size);
      const auto i = gates.topRows(h).array();
      const auto f = gates.middleRows(h, h).array();
      const auto g = gates.middleRows(2 * h, h).array();
      const auto o = gates.bottomRows(h).array();
      const auto tc = tr.tanh_cells.middleCols(col, size).array();
      auto dg = ws.d_gates.middleCols(col, size);

      const auto dh = ws.d_hidden.middleCols(col, size).array() + ws.dh_next.array();
      dg.bottomRows(h).array() = dh * tc * o * (S(1) - o);
      ws.dc_next.array() = dh * o * (S(1) - tc * tc) + ws.dc_next.array();  // now dc_t
      const auto dc = ws.dc_next.array();
      dg.topRows(h).array() = dc * g * i * (S(1) - i);
      dg.middleRows(2 * h, h).array() = dc * i * (S(1) - g * g);
      if (t > 0) {
        const auto c_prev = tr.cells.middleCols(col - size, size).array();
        dg.middleRows(h, h).array() = dc * c_prev * f * (S(1) - f);
      } else {
        dg.middleRows(h, h).setZero();
      }
      ws.dc_next.array() = dc * f;
      if (t > 0) ws.dh_next.noalias() = w_hh.transpose() * dg;
    }

    grad.w_ih(li).noalias() = ws.d_gates * input.transpose();
    if (steps > 1) {
      grad.w_hh(li).noalias() = ws.d_gates.rightCols((steps - 1) * size) *
                                tr.hidden.leftCols((steps - 1) * size).transpose();
    } else {
      grad.w_hh(li).setZero();
    }
    grad.bias(li) = ws.d_gates.rowwise().sum();
    if (li > 0) {
      ws.d_below.noalias() = model.w_ih(li).transpose() * ws.d_gates;
      ws.d_hidden.swap(ws.d_below);
    }
  }

  if (!grad.all_finite()) throw NumericalError("non-finite gradient");
}

template <class S>
struct GradientResult {
  S loss{};
  Model<S> gradient;
  Matrix<S> predictions;
};

/// Forward + loss + backward in one call (allocates a fresh workspace).
template <class S>
GradientResult<S> loss_and_gradient(const Model<S>& model, const Batch<S>& batch,
                                    std::span<const double> targets, LossKind kind) {
  Workspace<S> ws;
  GradientResult<S> result;
  result.predictions = forward_train(model, batch, ws);
  Matrix<S> d_output;
  result.loss = loss_and_output_grad(result.predictions, targets, kind, &d_output);
  result.gradient = model.zeros_like();
  backward(model, batch, ws, d_output, result.gradient);
  return result;
}

/// Inference-only forward pass. Processes time in chunks so memory does not
/// grow with sequence length. Returns one prediction per sequence.
template <class S>
std::vector<double> forward(const Model<S>& model, const Batch<S>& batch,
                            Eigen::Index chunk_steps = 256) {
  const auto& arch = model.architecture();
  const Eigen::Index h = arch.hidden, steps = batch.steps, size = batch.size;
  std::vector<Matrix<S>> hs(arch.layers, Matrix<S>::Zero(h, size));
  std::vector<Matrix<S>> cs(arch.layers, Matrix<S>::Zero(h, size));
  Matrix<S> pooled = Matrix<S>::Zero(h, size);
  Matrix<S> gates, layer_out, layer_in, recurrent, tanh_c(h, size);

  for (Eigen::Index start = 0; start < steps; start += chunk_steps) {
    const Eigen::Index len = std::min(chunk_steps, steps - start);
    layer_in = batch.inputs.middleCols(start * size, len * size);
    for (std::size_t l = 0; l < arch.layers; ++l) {
      gates.noalias() = model.w_ih(l) * layer_in;
      gates.colwise() += model.bias(l).col(0);
      layer_out.resize(h, len * size);
      for (Eigen::Index t = 0; t < len; ++t) {
        auto g = gates.middleCols(t * size, size);
        const bool first = start == 0 && t == 0;
        if (!first) {
          recurrent.noalias() = model.w_hh(l) * hs[l];
          g += recurrent;
        }
        // Coefficient-wise update, so c may alias its own previous value.
        detail::lstm_cell<S>(g, h, first ? nullptr : &cs[l], cs[l], tanh_c, hs[l]);
        layer_out.middleCols(t * size, size) = hs[l];
      }
      layer_in.swap(layer_out);
    }
    for (Eigen::Index t = 0; t < len; ++t) pooled += layer_in.middleCols(t * size, size);
  }
  pooled *= S(1) / static_cast<S>(steps);

  Matrix<S> z0, a0, z1, out;
  detail::head_forward(model, pooled, z0, a0, z1, out);
  detail::check_finite_output(out);
  std::vector<double> result(static_cast<std::size_t>(size));
  for (Eigen::Index j = 0; j < size; ++j) result[static_cast<std::size_t>(j)] = static_cast<double>(out(0, j));
  return result;
}

}  // namespace fracest::neural
