#pragma once

// Mini-batch training of the classifier with Adam. Loss is cross-entropy
// summed over the four heads and averaged over the batch. Gradients are
// accumulated in fixed-size chunks and reduced in chunk order, so results are
// bit-identical for any worker count.

#include "memesent/adam.hpp"
#include "memesent/classifier.hpp"
#include "memesent/parallel.hpp"
#include "memesent/random.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace memesent::model {

struct TrainConfig {
  int batch_size = 256;
  double learning_rate = 1e-3;
  int epochs = 150;
  std::uint64_t seed = 0;
  AdamConfig adam;
  int workers = 1;
  /// Tasks whose loss is trained; unselected heads receive no gradient.
  std::array<bool, 4> tasks = {true, true, true, true};

  /// Per-variant defaults: 150 epochs at 1e-3 (IMGTXT), 45 at 1e-3 (IMGSEN),
  /// 75 at 3e-4 (CAPSEN); batch size 256.
  static TrainConfig for_variant(VariantKind v) {
    TrainConfig c;
    switch (v) {
      case VariantKind::imgtxt: c.epochs = 150; break;
      case VariantKind::imgsen: c.epochs = 45; break;
      case VariantKind::capsen:
        c.epochs = 75;
        c.learning_rate = 3e-4;
        break;
    }
    return c;
  }

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("train config: learning rate must be > 0");
    if (epochs < 1) throw InputError("train config: epochs must be >= 1");
    if (batch_size < 1) throw InputError("train config: batch size must be >= 1");
  }
};

template <typename Scalar>
struct TrainingExample {
  MatrixX<Scalar> sequence;
  TaskLabels labels{-1, -1, -1, -1};
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::array<double, 4> accuracy{};  // per task, over examples labelled for it

  bool operator==(const EpochRecord&) const = default;
};

template <typename Scalar>
struct TrainResult {
  ClassifierParams<Scalar> params;
  std::vector<EpochRecord> history;
};

inline constexpr std::size_t kGradientChunk = 16;

template <typename Scalar>
void add_into(ClassifierParams<Scalar>& acc, ClassifierParams<Scalar>& x) {
  auto a = acc.tensors();
  auto b = x.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) *a[i].value += *b[i].value;
}

template <typename Scalar>
TaskLabels masked(const TaskLabels& labels, const std::array<bool, 4>& tasks) {
  TaskLabels out = labels;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!tasks[i]) out[i] = -1;
  }
  return out;
}

/// Mean loss gradient over `batch` (indices into `data`). Returns the mean loss.
template <typename Scalar>
Scalar batch_gradient(const std::vector<TrainingExample<Scalar>>& data, std::span<const std::size_t> batch,
                      const ClassifierParams<Scalar>& params, const std::array<bool, 4>& tasks, int workers,
                      ClassifierParams<Scalar>& grads) {
  const std::size_t n_chunks = (batch.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<ClassifierParams<Scalar>> chunk_grads(n_chunks);
  std::vector<Scalar> chunk_loss(n_chunks, Scalar(0));
  const Scalar weight = Scalar(1) / static_cast<Scalar>(batch.size());
  parallel_for(n_chunks, workers, [&](std::size_t c) {
    chunk_grads[c] = params.zeros_like();
    const std::size_t end = std::min(batch.size(), (c + 1) * kGradientChunk);
    for (std::size_t j = c * kGradientChunk; j < end; ++j) {
      const auto& ex = data[batch[j]];
      chunk_loss[c] += accumulate_gradient(ex.sequence, masked<Scalar>(ex.labels, tasks), params, chunk_grads[c], weight);
    }
  });
  grads = params.zeros_like();
  Scalar loss = 0;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    add_into(grads, chunk_grads[c]);
    loss += chunk_loss[c];
  }
  return loss * weight;
}

/// Mean loss and per-task accuracy of `params` over all of `data`.
template <typename Scalar>
EpochRecord evaluate_epoch(const std::vector<TrainingExample<Scalar>>& data, const ClassifierParams<Scalar>& params,
                           const std::array<bool, 4>& tasks, int workers) {
  std::vector<TaskPredictions<Scalar>> preds(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) { preds[i] = forward_sequence(data[i].sequence, params); });
  EpochRecord r;
  double loss = 0;
  std::array<std::size_t, 4> correct{}, total{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto labels = masked<Scalar>(data[i].labels, tasks);
    loss += static_cast<double>(cross_entropy(preds[i], labels));
    for (Task t : kAllTasks) {
      const auto ti = static_cast<std::size_t>(t);
      if (labels[ti] < 0) continue;
      ++total[ti];
      if (preds[i].predicted(t) == labels[ti]) ++correct[ti];
    }
  }
  r.loss = data.empty() ? 0.0 : loss / static_cast<double>(data.size());
  for (std::size_t t = 0; t < 4; ++t) r.accuracy[t] = total[t] ? static_cast<double>(correct[t]) / static_cast<double>(total[t]) : 0.0;
  return r;
}

/// Called after each epoch with the current parameters and that epoch's record.
template <typename Scalar>
using EpochCallback = std::function<void(const ClassifierParams<Scalar>&, const EpochRecord&)>;

template <typename Scalar>
TrainResult<Scalar> train(VariantKind variant, const ClassifierConfig& model_config,
                          const std::vector<TrainingExample<Scalar>>& data, const TrainConfig& config,
                          const EpochCallback<Scalar>& on_epoch = {}) {
  config.validate();
  if (data.empty()) throw InputError("train: empty dataset");
  TrainResult<Scalar> result{ClassifierParams<Scalar>::random(variant, model_config, config.seed), {}};
  auto& params = result.params;
  AdamState<Scalar> adam;
  Rng shuffle_rng(config.seed, "train.shuffle");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int step = 0;
  ClassifierParams<Scalar> grads;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const auto loss = batch_gradient<Scalar>(data, std::span<const std::size_t>(order).subspan(start, end - start),
                                               params, config.tasks, config.workers, grads);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      std::vector<MatrixX<Scalar>*> p;
      std::vector<const MatrixX<Scalar>*> g;
      for (auto& t : params.tensors()) p.push_back(t.value);
      for (auto& t : grads.tensors()) g.push_back(t.value);
      adam_step<Scalar>(p, g, adam, config.learning_rate, ++step, config.adam);
    }
    EpochRecord rec = evaluate_epoch(data, params, config.tasks, config.workers);
    rec.epoch = epoch;
    if (!std::isfinite(rec.loss)) throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    if (on_epoch) on_epoch(params, rec);
  }
  return result;
}

}  // namespace memesent::model
