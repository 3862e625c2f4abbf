#pragma once

// Stacked BiLSTM trunk with four task heads (humor, sarcasm, motivation:
// two classes; sentiment: three). The trunk feature is the last forward
// state concatenated with the first-position backward state of the top layer.

#include "memesent/fusion.hpp"
#include "memesent/lstm.hpp"
#include "memesent/nn.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace memesent::model {

struct ClassifierConfig {
  int input_width = 64;
  int hidden = 32;
  int bilstm_layers = 2;
  int head_hidden = 32;  // 0: heads are a single affine + softmax

  void validate() const {
    if (input_width < 1 || hidden < 1 || bilstm_layers < 1 || head_hidden < 0) {
      throw InputError("classifier config: widths and layer counts must be positive");
    }
  }
  bool operator==(const ClassifierConfig&) const = default;
};

template <typename Scalar>
struct HeadParams {
  MatrixX<Scalar> hidden_w, hidden_b;  // feature x head_hidden (empty when head_hidden == 0)
  MatrixX<Scalar> out_w, out_b;        // in x classes, 1 x classes
};

template <typename Scalar>
struct ClassifierParams {
  VariantKind variant = VariantKind::imgsen;
  ClassifierConfig config;
  std::vector<BiLstmParams<Scalar>> layers;
  std::array<HeadParams<Scalar>, 4> heads;

  static ClassifierParams zeros(VariantKind variant, const ClassifierConfig& config) {
    config.validate();
    ClassifierParams p;
    p.variant = variant;
    p.config = config;
    for (int l = 0; l < config.bilstm_layers; ++l) {
      p.layers.push_back(BiLstmParams<Scalar>::zeros(l == 0 ? config.input_width : 2 * config.hidden, config.hidden));
    }
    const int feat = 2 * config.hidden;
    for (Task t : kAllTasks) {
      auto& h = p.heads[static_cast<std::size_t>(t)];
      const int k = task_arity(t);
      if (config.head_hidden > 0) {
        h.hidden_w = MatrixX<Scalar>::Zero(feat, config.head_hidden);
        h.hidden_b = MatrixX<Scalar>::Zero(1, config.head_hidden);
        h.out_w = MatrixX<Scalar>::Zero(config.head_hidden, k);
      } else {
        h.out_w = MatrixX<Scalar>::Zero(feat, k);
      }
      h.out_b = MatrixX<Scalar>::Zero(1, k);
    }
    return p;
  }

  static ClassifierParams random(VariantKind variant, const ClassifierConfig& config, std::uint64_t seed) {
    auto p = zeros(variant, config);
    Rng rng(seed, "model.init");
    for (auto& layer : p.layers) layer = BiLstmParams<Scalar>::random(layer.fwd.input_width(), config.hidden, rng);
    for (auto& h : p.heads) {
      if (h.hidden_w.size() > 0) nn::fill_normal(h.hidden_w, rng, 1.0 / std::sqrt(static_cast<double>(h.hidden_w.rows())));
      nn::fill_normal(h.out_w, rng, 1.0 / std::sqrt(static_cast<double>(h.out_w.rows())));
    }
    return p;
  }

  /// Zero tensors with this model's shapes.
  ClassifierParams zeros_like() const { return zeros(variant, config); }

  std::vector<nn::NamedTensor<Scalar>> tensors() {
    std::vector<nn::NamedTensor<Scalar>> t;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (auto& x : layers[l].tensors("bilstm" + std::to_string(l) + ".")) t.push_back(x);
    }
    for (Task task : kAllTasks) {
      auto& h = heads[static_cast<std::size_t>(task)];
      const std::string pre = "head." + std::string(task_name(task)) + ".";
      if (h.hidden_w.size() > 0) {
        t.push_back({pre + "hidden_w", &h.hidden_w});
        t.push_back({pre + "hidden_b", &h.hidden_b});
      }
      t.push_back({pre + "out_w", &h.out_w});
      t.push_back({pre + "out_b", &h.out_b});
    }
    return t;
  }

  std::vector<nn::ConstNamedTensor<Scalar>> tensors() const {
    std::vector<nn::ConstNamedTensor<Scalar>> out;
    for (auto& t : const_cast<ClassifierParams*>(this)->tensors()) out.push_back({t.name, t.value});
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += static_cast<std::size_t>(t.value->size());
    return n;
  }
};

/// Per-task class probabilities, indexed by Task.
template <typename Scalar>
struct TaskPredictions {
  std::array<VectorX<Scalar>, 4> probs;

  const VectorX<Scalar>& operator[](Task t) const { return probs[static_cast<std::size_t>(t)]; }
  int predicted(Task t) const {
    Eigen::Index i;
    (*this)[t].maxCoeff(&i);
    return static_cast<int>(i);
  }
  bool operator==(const TaskPredictions& o) const {
    for (std::size_t i = 0; i < 4; ++i) {
      if (probs[i].size() != o.probs[i].size() || probs[i] != o.probs[i]) return false;
    }
    return true;
  }
};

/// Affine map then softmax.
template <typename Scalar>
VectorX<Scalar> dense_softmax_head(const RowVectorX<Scalar>& features, const MatrixX<Scalar>& w, const MatrixX<Scalar>& b) {
  if (features.size() != w.rows()) throw InputError("dense_softmax_head: feature width mismatch");
  if (w.cols() < 2 || w.cols() > 3) throw InputError("dense_softmax_head: heads have 2 or 3 classes");
  const RowVectorX<Scalar> logits = features * w + b.row(0);
  return nn::softmax(logits.transpose());
}

/// Label per task; -1 marks a task without a label for this example.
using TaskLabels = std::array<int, 4>;

template <typename Scalar>
struct ForwardCache {
  std::vector<MatrixX<Scalar>> inputs;  // input to each BiLSTM layer
  std::vector<BiLstmCache<Scalar>> layers;
  MatrixX<Scalar> top;  // output of the last layer
  RowVectorX<Scalar> feature;
  std::array<RowVectorX<Scalar>, 4> head_hidden;
};

template <typename Scalar>
TaskPredictions<Scalar> forward_sequence(const MatrixX<Scalar>& seq, const ClassifierParams<Scalar>& p,
                                         ForwardCache<Scalar>* cache = nullptr) {
  if (seq.cols() != p.config.input_width) {
    throw InputError("classifier: input width " + std::to_string(seq.cols()) + " != " +
                     std::to_string(p.config.input_width));
  }
  const int hid = p.config.hidden;
  MatrixX<Scalar> x = seq;
  if (cache != nullptr) {
    cache->inputs.clear();
    cache->layers.assign(p.layers.size(), {});
  }
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    if (cache != nullptr) cache->inputs.push_back(x);
    x = bilstm(x, p.layers[l], cache ? &cache->layers[l] : nullptr);
  }
  RowVectorX<Scalar> feature(2 * hid);
  feature.head(hid) = x.row(x.rows() - 1).head(hid);
  feature.tail(hid) = x.row(0).tail(hid);

  TaskPredictions<Scalar> out;
  for (Task t : kAllTasks) {
    const auto ti = static_cast<std::size_t>(t);
    const auto& h = p.heads[ti];
    RowVectorX<Scalar> z = feature;
    if (h.hidden_w.size() > 0) {
      z = (feature * h.hidden_w + h.hidden_b.row(0)).array().tanh().matrix();
    }
    if (cache != nullptr) cache->head_hidden[ti] = z;
    out.probs[ti] = dense_softmax_head(z, h.out_w, h.out_b);
  }
  if (cache != nullptr) {
    cache->top = std::move(x);
    cache->feature = std::move(feature);
  }
  return out;
}

/// Checks the variant wiring against the row provenance, then runs the model.
template <typename Scalar>
TaskPredictions<Scalar> forward(VariantKind variant, const fusion::FusedRepresentation<Scalar>& fused,
                                const ClassifierParams<Scalar>& params) {
  if (variant != params.variant) {
    throw InputError("forward: parameters were built for " + std::string(variant_heading(params.variant)) + ", not " +
                     std::string(variant_heading(variant)));
  }
  if (!fusion::matches_variant(variant, fused)) {
    throw InputError("forward: row provenance does not match the " + std::string(variant_heading(variant)) + " wiring");
  }
  return forward_sequence(fused.values, params);
}

/// Sum over labelled tasks of -log p[label].
template <typename Scalar>
Scalar cross_entropy(const TaskPredictions<Scalar>& pred, const TaskLabels& labels) {
  Scalar loss = 0;
  for (Task t : kAllTasks) {
    const int y = labels[static_cast<std::size_t>(t)];
    if (y < 0) continue;
    loss -= std::log(pred[t](y));
  }
  return loss;
}

/// Adds `weight` * d(cross_entropy)/d(params) into `grads` and returns the
/// unweighted loss. Optionally returns dL/dseq.
template <typename Scalar>
Scalar accumulate_gradient(const MatrixX<Scalar>& seq, const TaskLabels& labels, const ClassifierParams<Scalar>& p,
                           ClassifierParams<Scalar>& grads, Scalar weight = Scalar(1),
                           MatrixX<Scalar>* dseq_out = nullptr) {
  ForwardCache<Scalar> cache;
  const auto pred = forward_sequence(seq, p, &cache);
  const Scalar loss = cross_entropy(pred, labels);
  const int hid = p.config.hidden;

  RowVectorX<Scalar> dfeature = RowVectorX<Scalar>::Zero(2 * hid);
  for (Task t : kAllTasks) {
    const auto ti = static_cast<std::size_t>(t);
    const int y = labels[ti];
    if (y < 0) continue;
    const auto& h = p.heads[ti];
    auto& g = grads.heads[ti];
    RowVectorX<Scalar> dlogits = pred[t].transpose() * weight;
    dlogits(y) -= weight;
    const RowVectorX<Scalar>& z = cache.head_hidden[ti];
    g.out_w += z.transpose() * dlogits;
    g.out_b += dlogits;
    RowVectorX<Scalar> dz = dlogits * h.out_w.transpose();
    if (h.hidden_w.size() > 0) {
      const RowVectorX<Scalar> dpre = (dz.array() * (Scalar(1) - z.array().square())).matrix();
      g.hidden_w += cache.feature.transpose() * dpre;
      g.hidden_b += dpre;
      dz = dpre * h.hidden_w.transpose();
    }
    dfeature += dz;
  }

  MatrixX<Scalar> dx = MatrixX<Scalar>::Zero(cache.top.rows(), 2 * hid);
  dx.row(dx.rows() - 1).head(hid) += dfeature.head(hid);
  dx.row(0).tail(hid) += dfeature.tail(hid);
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    dx = bilstm_backward(cache.inputs[l], p.layers[l], cache.layers[l], dx, grads.layers[l]);
  }
  if (dseq_out != nullptr) *dseq_out = std::move(dx);
  return loss;
}

}  // namespace memesent::model
