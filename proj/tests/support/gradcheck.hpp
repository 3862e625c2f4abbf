#pragma once

// Central-difference gradient checks shared by the unit tests and the
// acceptance runner. Each scenario builds a small double-precision problem,
// computes analytic gradients, and reports the worst relative error
//   ||analytic - numeric|| / max(||analytic|| + ||numeric||, 1e-12)
// over every tensor (parameters and inputs).

#include "memesent/classifier.hpp"
#include "memesent/lstm.hpp"
#include "memesent/nn.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace memesent::testing {

using Mat = MatrixX<double>;

inline constexpr double kGradStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;
/// Denominator floor: a gradient that is identically zero (the key bias
/// under softmax shift invariance) is compared on an absolute scale.
inline constexpr double kGradFloor = 1e-3;

struct TensorCheck {
  std::string name;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double worst() const {
    double w = 0.0;
    for (const auto& t : tensors) w = std::max(w, t.rel_error);
    return w;
  }
  std::string worst_name() const {
    std::string n;
    double w = -1.0;
    for (const auto& t : tensors) {
      if (t.rel_error > w) {
        w = t.rel_error;
        n = t.name;
      }
    }
    return n;
  }
};

inline double relative_error(const Mat& analytic, const Mat& numeric) {
  return (analytic - numeric).norm() / std::max(analytic.norm() + numeric.norm(), kGradFloor);
}

/// Numeric gradient of loss() with respect to *x, by central differences.
inline Mat numeric_gradient(const std::function<double()>& loss, Mat* x, double h = kGradStep) {
  Mat g(x->rows(), x->cols());
  for (Eigen::Index i = 0; i < x->size(); ++i) {
    const double saved = x->data()[i];
    x->data()[i] = saved + h;
    const double up = loss();
    x->data()[i] = saved - h;
    const double down = loss();
    x->data()[i] = saved;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

struct GradTarget {
  std::string name;
  Mat* value;
  const Mat* analytic;
};

inline GradCheckReport compare(const std::function<double()>& loss, const std::vector<GradTarget>& targets) {
  GradCheckReport r;
  for (const auto& t : targets) r.tensors.push_back({t.name, relative_error(*t.analytic, numeric_gradient(loss, t.value))});
  return r;
}

inline Mat random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// Loss = <attention(q, k, v), R>.
inline GradCheckReport attention_gradcheck(std::uint64_t seed, bool causal = false) {
  Rng rng(seed, "gradcheck.attention");
  Mat q = random_matrix(rng, 4, 6), k = random_matrix(rng, 3, 6), v = random_matrix(rng, 3, 5);
  if (causal) k = random_matrix(rng, 4, 6), v = random_matrix(rng, 4, 5);
  const Mat r = random_matrix(rng, q.rows(), v.cols());
  nn::AttentionCache<double> cache;
  nn::attention(q, k, v, causal, &cache);
  const auto g = nn::attention_backward(q, k, v, cache, r);
  const auto loss = [&] { return (nn::attention(q, k, v, causal).array() * r.array()).sum(); };
  return compare(loss, {{"q", &q, &g.dq}, {"k", &k, &g.dk}, {"v", &v, &g.dv}});
}

/// Loss = <transformer_block(x), R> over every parameter and the input.
inline GradCheckReport transformer_block_gradcheck(std::uint64_t seed) {
  Rng rng(seed, "gradcheck.block");
  auto p = nn::TransformerBlockParams<double>::random(8, 2, 8, rng);
  // Non-trivial norm parameters so their gradients are exercised.
  p.ln1_gamma = random_matrix(rng, 1, 8, 0.3).array() + 1.0;
  p.ln2_beta = random_matrix(rng, 1, 8, 0.1);
  p.b1 = random_matrix(rng, 1, 8, 0.1);
  Mat x = random_matrix(rng, 4, 8);
  const Mat r = random_matrix(rng, 4, 8);
  auto grads = nn::TransformerBlockParams<double>::zeros(8, 2, 8);
  nn::TransformerBlockCache<double> cache;
  nn::transformer_block(x, p, &cache);
  const Mat dx = nn::transformer_block_backward(p, cache, r, grads);
  const auto loss = [&] { return (nn::transformer_block(x, p).array() * r.array()).sum(); };
  std::vector<GradTarget> targets{{"x", &x, &dx}};
  auto pt = p.tensors("");
  auto gt = grads.tensors("");
  for (std::size_t i = 0; i < pt.size(); ++i) targets.push_back({pt[i].name, pt[i].value, gt[i].value});
  return compare(loss, targets);
}

/// Loss = <h', R1> + <c', R2> for one step from a non-zero state.
inline GradCheckReport lstm_cell_gradcheck(std::uint64_t seed) {
  Rng rng(seed, "gradcheck.lstm_cell");
  auto p = model::LstmParams<double>::random(5, 4, rng);
  p.b = random_matrix(rng, 1, 16, 0.2);
  Mat x = random_matrix(rng, 1, 5), h = random_matrix(rng, 1, 4, 0.5), c = random_matrix(rng, 1, 4, 0.5);
  const Mat r1 = random_matrix(rng, 1, 4), r2 = random_matrix(rng, 1, 4);
  auto grads = model::LstmParams<double>::zeros(5, 4);
  using Row = RowVectorX<double>;
  const auto g = model::lstm_cell_backward<double>(Row(x), Row(h), Row(c), p, Row(r1), Row(r2), grads);
  const Mat dx = g.dx, dh = g.dh, dc = g.dc;
  const auto loss = [&] {
    const auto s = model::lstm_cell<double>(Row(x), Row(h), Row(c), p);
    return s.h.dot(Row(r1)) + s.c.dot(Row(r2));
  };
  return compare(loss, {{"x", &x, &dx}, {"h", &h, &dh}, {"c", &c, &dc}, {"w", &p.w, &grads.w}, {"u", &p.u, &grads.u},
                        {"b", &p.b, &grads.b}});
}

/// Loss = <bilstm(seq), R>.
inline GradCheckReport bilstm_gradcheck(std::uint64_t seed) {
  Rng rng(seed, "gradcheck.bilstm");
  auto p = model::BiLstmParams<double>::random(6, 4, rng);
  Mat seq = random_matrix(rng, 4, 6);
  const Mat r = random_matrix(rng, 4, 8);
  auto grads = model::BiLstmParams<double>::zeros(6, 4);
  model::BiLstmCache<double> cache;
  model::bilstm(seq, p, &cache);
  const Mat dseq = model::bilstm_backward(seq, p, cache, r, grads);
  const auto loss = [&] { return (model::bilstm(seq, p).array() * r.array()).sum(); };
  std::vector<GradTarget> targets{{"seq", &seq, &dseq}};
  auto pt = p.tensors("");
  auto gt = grads.tensors("");
  for (std::size_t i = 0; i < pt.size(); ++i) targets.push_back({pt[i].name, pt[i].value, gt[i].value});
  return compare(loss, targets);
}

/// Full classifier: summed cross-entropy over the four heads, every
/// parameter plus the input sequence.
inline GradCheckReport model_gradcheck(std::uint64_t seed, model::TaskLabels labels = {1, 0, 1, 2}) {
  model::ClassifierConfig cfg;
  cfg.input_width = 6;
  cfg.hidden = 4;
  cfg.bilstm_layers = 2;
  cfg.head_hidden = 5;
  auto p = model::ClassifierParams<double>::random(VariantKind::imgsen, cfg, seed);
  Rng rng(seed, "gradcheck.model");
  for (auto& t : p.tensors()) {
    if (t.name.find("out_b") != std::string::npos || t.name.find("hidden_b") != std::string::npos) {
      *t.value = random_matrix(rng, t.value->rows(), t.value->cols(), 0.1);
    }
  }
  Mat seq = random_matrix(rng, 4, 6);
  auto grads = p.zeros_like();
  Mat dseq;
  model::accumulate_gradient(seq, labels, p, grads, 1.0, &dseq);
  const auto loss = [&] { return model::cross_entropy(model::forward_sequence(seq, p), labels); };
  std::vector<GradTarget> targets{{"seq", &seq, &dseq}};
  auto pt = p.tensors();
  auto gt = grads.tensors();
  for (std::size_t i = 0; i < pt.size(); ++i) targets.push_back({pt[i].name, pt[i].value, gt[i].value});
  return compare(loss, targets);
}

}  // namespace memesent::testing
