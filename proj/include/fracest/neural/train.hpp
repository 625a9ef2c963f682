#pragma once

#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <stop_token>
#include <thread>
#include <vector>

#include "fracest/core/errors.hpp"
#include "fracest/core/params.hpp"
#include "fracest/core/random.hpp"
#include "fracest/generators/batch.hpp"
#include "fracest/neural/lstm.hpp"
#include "fracest/neural/model.hpp"
#include "fracest/neural/optimizer.hpp"
#include "fracest/neural/preprocess.hpp"

namespace fracest::neural {

struct TrainConfig {
  AdamWConfig optimizer{};
  LossKind loss = LossKind::mse;
  std::uint32_t epochs = 25;
  std::size_t sequences_per_epoch = 100'000;
  std::size_t train_batch = 32;
  std::size_t val_batch = 128;
  std::size_t val_sequences = 2'048;  // fresh validation sequences per epoch
  std::size_t sequence_length = 1600;  // path length; the network sees length - 1 increments
  ProcessKind process = ProcessKind::fbm;
  FouParams fou{};  // hurst is drawn per sequence; the other fields are used as given
  FouScheme fou_scheme = FouScheme::euler_maruyama;
  double dt = 1.0;
  std::uint64_t seed = 0;
  Architecture arch = Architecture::reference();
  unsigned threads = 1;  // data generation workers
  std::size_t prefetch_depth = 4;
};

inline void validate(const TrainConfig& cfg) {
  const auto& o = cfg.optimizer;
  if (!(o.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(o.weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0 && o.beta2 >= 0.0 && o.beta2 < 1.0)) {
    throw ValidationError("betas must lie in [0,1)");
  }
  if (!(o.epsilon > 0.0)) throw ValidationError("eps must be > 0");
  if (cfg.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (cfg.train_batch < 1 || cfg.val_batch < 1) throw ValidationError("batch sizes must be >= 1");
  if (cfg.sequences_per_epoch < 1) throw ValidationError("sequences per epoch must be >= 1");
  if (cfg.val_sequences < 1) throw ValidationError("validation sequences must be >= 1");
  if (cfg.sequence_length < 3) throw ValidationError("sequence length must be >= 3");
  if (cfg.prefetch_depth < 1) throw ValidationError("prefetch depth must be >= 1");
  if (!(cfg.dt > 0.0)) throw ValidationError("dt must be > 0");
  if (cfg.process == ProcessKind::lfsm) throw ValidationError("training supports fbm and fou only");
  if (cfg.process == ProcessKind::fou) {
    FouParams p = cfg.fou;
    p.hurst = 0.5;
    if (auto s = validate(ProcessParams{p}); !s) throw ValidationError(s.message);
  }
}

struct EpochLoss {
  std::uint32_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::size_t skipped_steps = 0;
};

template <class S>
struct TrainResult {
  Model<S> best;   // lowest validation loss
  Model<S> final;  // after the last epoch
  std::uint32_t best_epoch = 0;
  std::vector<EpochLoss> history;
};

/// A batch of standardized increments with their generating H values.
template <class S>
struct LabeledBatch {
  Batch<S> inputs;
  std::vector<double> targets;
};

/// Generation request for the synthetic stream of a given split. Sequence i of
/// the split is trajectory i of this request.
inline GenerationRequest stream_request(const TrainConfig& cfg, std::string_view split) {
  GenerationRequest req;
  if (cfg.process == ProcessKind::fou) req.params = cfg.fou;
  else req.params = FbmParams{0.5};
  req.n = cfg.sequence_length;
  req.hurst_mode = HurstMode::uniform;
  req.dt = cfg.dt;
  req.fou_scheme = cfg.fou_scheme;
  req.master_seed = derive_seed(cfg.seed, split);
  req.threads = cfg.threads;
  return req;
}

template <class S>
LabeledBatch<S> make_labeled_batch(GenerationRequest req, std::uint64_t first, std::size_t count) {
  req.first_index = first;
  req.count = count;
  const auto paths = generate_batch(req);
  std::vector<std::vector<double>> inputs(count);
  LabeledBatch<S> out;
  out.targets.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    inputs[i] = preprocess(paths[i].values).values;
    out.targets[i] = *paths[i].meta.true_hurst();
  }
  out.inputs = make_batch<S>(inputs);
  return out;
}

namespace detail {

/// Single-producer single-consumer queue of fixed capacity. Items carry either
/// a value or the producer's exception.
template <class T>
class BoundedQueue {
public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  bool push(T item, std::stop_token stop) {
    std::unique_lock lock(mutex_);
    if (!not_full_.wait(lock, stop, [&] { return items_.size() < capacity_; })) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  T pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty(); });
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable_any not_full_, not_empty_;
  std::deque<T> items_;
};

struct BatchSlot {
  std::uint64_t first = 0;
  std::size_t count = 0;
  bool validation = false;
};

/// Every batch of a run in consumption order: each epoch's training batches,
/// then its validation batches. The schedule of epoch e does not depend on the
/// total epoch count.
inline std::vector<BatchSlot> batch_schedule(const TrainConfig& cfg) {
  std::vector<BatchSlot> slots;
  for (std::uint64_t e = 0; e < cfg.epochs; ++e) {
    const std::uint64_t train_base = e * cfg.sequences_per_epoch;
    for (std::size_t s = 0; s < cfg.sequences_per_epoch; s += cfg.train_batch) {
      slots.push_back({train_base + s, std::min(cfg.train_batch, cfg.sequences_per_epoch - s), false});
    }
    const std::uint64_t val_base = e * cfg.val_sequences;
    for (std::size_t s = 0; s < cfg.val_sequences; s += cfg.val_batch) {
      slots.push_back({val_base + s, std::min(cfg.val_batch, cfg.val_sequences - s), true});
    }
  }
  return slots;
}

}  // namespace detail

/// Trains on freshly generated sequences. The result depends only on `cfg`
/// minus `threads` and `prefetch_depth`, which affect speed alone.
template <class S = float>
TrainResult<S> train(const TrainConfig& cfg,
                     const std::function<void(const EpochLoss&)>& on_epoch = {}) {
  validate(cfg);
  Model<S> model = initialize<S>(cfg.arch, cfg.seed);
  model.meta() = {cfg.loss, cfg.epochs, static_cast<std::uint32_t>(cfg.sequence_length), cfg.seed};
  AdamW<S> optimizer(model, cfg.optimizer);

  const auto train_req = stream_request(cfg, "train");
  const auto val_req = stream_request(cfg, "validation");
  const auto schedule = detail::batch_schedule(cfg);

  struct Item {
    std::optional<LabeledBatch<S>> batch;
    std::exception_ptr error;
  };
  detail::BoundedQueue<Item> queue(cfg.prefetch_depth);
  std::jthread producer([&](std::stop_token stop) {
    for (const auto& slot : schedule) {
      Item item;
      try {
        item.batch = make_labeled_batch<S>(slot.validation ? val_req : train_req, slot.first, slot.count);
      } catch (...) {
        item.error = std::current_exception();
      }
      const bool failed = static_cast<bool>(item.error);
      if (!queue.push(std::move(item), stop) || failed) return;
    }
  });
  auto next = [&] {
    Item item = queue.pop();
    if (item.error) std::rethrow_exception(item.error);
    return std::move(*item.batch);
  };

  TrainResult<S> result;
  double best_val = std::numeric_limits<double>::infinity();
  Workspace<S> ws;
  Model<S> grad = model.zeros_like();
  Matrix<S> d_output;
  std::size_t cursor = 0;

  for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLoss rec{epoch};
    double train_sum = 0.0;
    std::size_t steps = 0, finite_steps = 0;
    for (; cursor < schedule.size() && !schedule[cursor].validation; ++cursor, ++steps) {
      const auto lb = next();
      try {
        const auto& pred = forward_train(model, lb.inputs, ws);
        const double loss = loss_and_output_grad(pred, lb.targets, cfg.loss, &d_output);
        if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
        backward(model, lb.inputs, ws, d_output, grad);
        optimizer.step(model, grad);
        train_sum += loss;
        ++finite_steps;
      } catch (const NumericalError&) {
        ++rec.skipped_steps;
      }
    }
    if (finite_steps == 0) {
      throw DivergenceError("training diverged: every step of epoch " + std::to_string(epoch) +
                            " produced a non-finite loss or gradient");
    }
    rec.train_loss = train_sum / static_cast<double>(finite_steps);

    double val_sum = 0.0;
    std::size_t val_count = 0;
    bool val_finite = true;
    for (; cursor < schedule.size() && schedule[cursor].validation; ++cursor) {
      const auto lb = next();
      try {
        const auto pred = forward(model, lb.inputs);
        for (std::size_t j = 0; j < pred.size(); ++j) {
          const double diff = pred[j] - lb.targets[j];
          val_sum += cfg.loss == LossKind::mse ? diff * diff : std::abs(diff);
        }
        val_count += pred.size();
      } catch (const NumericalError&) {
        val_finite = false;
      }
    }
    rec.val_loss = val_finite && val_count > 0 ? val_sum / static_cast<double>(val_count)
                                               : std::numeric_limits<double>::quiet_NaN();
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.best = model;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  result.final = std::move(model);
  if (result.best_epoch == 0) {
    result.best = result.final;
    result.best_epoch = cfg.epochs;
  }
  return result;
}

inline void write_loss_history_csv(std::ostream& out, const std::vector<EpochLoss>& history,
                                   LossKind kind) {
  out << "epoch,train_loss,val_loss,loss_kind\n";
  out.precision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << to_string(kind) << '\n';
  }
  if (!out) throw IoError("failed writing loss history");
}

}  // namespace fracest::neural
