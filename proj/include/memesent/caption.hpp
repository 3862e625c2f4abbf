#pragma once

// Caption generation: a small convolutional feature extractor feeding a
// pre-norm transformer decoder, decoded greedily. Ships untrained; the
// contract is decoding mechanics, not caption quality.

#include "memesent/encode.hpp"
#include "memesent/nn.hpp"

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

namespace memesent::encode {

/// Greedy decoding over a step function mapping the current prefix of token
/// ids to next-token logits. Stops when `end_id` is the argmax or after
/// `max_len` emitted tokens. Ties go to the lowest id; ids in `never_emit`
/// are skipped.
template <typename Scalar, typename StepFn>
std::vector<int> greedy_decode(StepFn&& step_logits, int start_id, int end_id, int max_len,
                               std::span<const int> never_emit = {}) {
  if (max_len < 1) throw InputError("greedy_decode: max_len must be >= 1");
  std::vector<int> prefix = {start_id};
  std::vector<int> out;
  while (static_cast<int>(out.size()) < max_len) {
    const VectorX<Scalar> logits = step_logits(std::span<const int>(prefix));
    int best = -1;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const int id = static_cast<int>(i);
      if (std::find(never_emit.begin(), never_emit.end(), id) != never_emit.end()) continue;
      if (best < 0 || logits(i) > logits(best)) best = id;
    }
    if (best < 0 || best == end_id) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convolutional feature extractor

template <typename Scalar>
struct ConvFeatureParams {
  int kernel = 3;
  int stride = 2;
  int grid = 4;              // conv output is average-pooled to at most grid x grid cells
  MatrixX<Scalar> weights;   // (k*k*C) x out_channels
  MatrixX<Scalar> bias;      // 1 x out_channels
};

/// 'same'-padded strided convolution + ReLU, then average pooling over a
/// coarse grid; returns one row per pooled cell in row-major order.
template <typename Scalar>
MatrixX<Scalar> conv_features(const Image<Scalar>& image, const ConvFeatureParams<Scalar>& p) {
  const int k = p.kernel;
  const int pad = k / 2;
  const int oh = (image.height + 2 * pad - k) / p.stride + 1;
  const int ow = (image.width + 2 * pad - k) / p.stride + 1;
  const int c = image.channels;
  if (p.weights.rows() != k * k * c) throw InputError("conv_features: kernel does not match image channels");
  MatrixX<Scalar> cols(oh * ow, k * k * c);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      int j = 0;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const int iy = y * p.stride + ky - pad;
          const int ix = x * p.stride + kx - pad;
          const bool inside = iy >= 0 && iy < image.height && ix >= 0 && ix < image.width;
          for (int ch = 0; ch < c; ++ch) cols(y * ow + x, j++) = inside ? image.at(iy, ix, ch) : Scalar(0);
        }
      }
    }
  }
  MatrixX<Scalar> fmap = nn::linear(cols, p.weights, p.bias).cwiseMax(Scalar(0));
  const int ph = std::min(p.grid, oh);
  const int pw = std::min(p.grid, ow);
  const int cell_h = oh / ph;
  const int cell_w = ow / pw;
  MatrixX<Scalar> pooled = MatrixX<Scalar>::Zero(ph * pw, fmap.cols());
  for (int y = 0; y < ph * cell_h; ++y) {
    for (int x = 0; x < pw * cell_w; ++x) pooled.row((y / cell_h) * pw + x / cell_w) += fmap.row(y * ow + x);
  }
  return pooled / static_cast<Scalar>(cell_h * cell_w);
}

// ---------------------------------------------------------------------------
// Transformer decoder

template <typename Scalar>
struct DecoderBlockParams {
  MatrixX<Scalar> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta, ln3_gamma, ln3_beta;
  nn::MultiHeadAttentionParams<Scalar> self_attn, cross_attn;
  MatrixX<Scalar> w1, b1, w2, b2;

  static DecoderBlockParams random(int d, int n_heads, int ffn, Rng& rng) {
    DecoderBlockParams p;
    for (auto* g : {&p.ln1_gamma, &p.ln2_gamma, &p.ln3_gamma}) *g = MatrixX<Scalar>::Ones(1, d);
    for (auto* b : {&p.ln1_beta, &p.ln2_beta, &p.ln3_beta}) *b = MatrixX<Scalar>::Zero(1, d);
    p.self_attn = nn::MultiHeadAttentionParams<Scalar>::random(d, n_heads, rng);
    p.cross_attn = nn::MultiHeadAttentionParams<Scalar>::random(d, n_heads, rng);
    p.w1 = MatrixX<Scalar>(d, ffn);
    nn::fill_normal(p.w1, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    p.b1 = MatrixX<Scalar>::Zero(1, ffn);
    p.w2 = MatrixX<Scalar>(ffn, d);
    nn::fill_normal(p.w2, rng, 1.0 / std::sqrt(static_cast<double>(ffn)));
    p.b2 = MatrixX<Scalar>::Zero(1, d);
    return p;
  }
};

template <typename Scalar>
MatrixX<Scalar> decoder_block(const MatrixX<Scalar>& x, const MatrixX<Scalar>& memory,
                              const DecoderBlockParams<Scalar>& p) {
  const MatrixX<Scalar> a1 = nn::layer_norm(x, p.ln1_gamma, p.ln1_beta);
  MatrixX<Scalar> h = x + nn::multi_head_attention(a1, a1, p.self_attn, /*causal=*/true);
  const MatrixX<Scalar> a2 = nn::layer_norm(h, p.ln2_gamma, p.ln2_beta);
  h += nn::multi_head_attention(a2, memory, p.cross_attn);
  const MatrixX<Scalar> a3 = nn::layer_norm(h, p.ln3_gamma, p.ln3_beta);
  const MatrixX<Scalar> act = nn::linear(a3, p.w1, p.b1).unaryExpr([](Scalar v) { return nn::gelu(v); });
  return h + nn::linear(act, p.w2, p.b2);
}

inline constexpr int kCaptionStart = 0;
inline constexpr int kCaptionEnd = 1;

/// Default caption vocabulary; ids 0 and 1 are the start and end markers.
inline std::vector<std::string> default_caption_words() {
  return {"<start>", "<end>", "a",     "the",   "man",    "woman", "dog",   "cat",    "child", "people",
          "is",      "are",   "with",  "on",    "in",     "at",    "of",    "and",    "two",   "group",
          "sitting", "standing", "running", "playing", "holding", "looking", "smiling", "wearing", "red",
          "blue",    "black", "white", "green", "shirt",  "hat",   "ball",  "street", "water", "grass",
          "table",   "car",   "phone", "face",  "text",   "sign",  "room",  "front",  "camera"};
}

template <typename Scalar>
struct CaptionModelParams {
  EncoderSpec spec;
  std::vector<std::string> words;
  ConvFeatureParams<Scalar> conv;
  MatrixX<Scalar> memory_positions;  // max memory rows x d
  MatrixX<Scalar> token_table;       // V x d
  MatrixX<Scalar> positions;         // (max_len + 1) x d
  std::vector<DecoderBlockParams<Scalar>> blocks;
  MatrixX<Scalar> final_gamma, final_beta;
  MatrixX<Scalar> out_w, out_b;  // d x V, 1 x V

  static CaptionModelParams random(const EncoderSpec& spec, int channels, int max_len = 16, int max_memory = 64,
                                   std::vector<std::string> words = default_caption_words()) {
    spec.validate();
    Rng rng(spec.seed, "encode.caption");
    const int d = spec.d_model;
    const int v = static_cast<int>(words.size());
    CaptionModelParams p;
    p.spec = spec;
    p.words = std::move(words);
    p.conv.weights = MatrixX<Scalar>(p.conv.kernel * p.conv.kernel * channels, d);
    nn::fill_normal(p.conv.weights, rng, 1.0 / std::sqrt(static_cast<double>(p.conv.weights.rows())));
    p.conv.bias = MatrixX<Scalar>::Zero(1, d);
    p.memory_positions = MatrixX<Scalar>(max_memory, d);
    nn::fill_normal(p.memory_positions, rng, 0.5);
    p.token_table = MatrixX<Scalar>(v, d);
    nn::fill_normal(p.token_table, rng, 1.0);
    p.positions = MatrixX<Scalar>(max_len + 1, d);
    nn::fill_normal(p.positions, rng, 0.5);
    for (int i = 0; i < spec.n_layers; ++i) p.blocks.push_back(DecoderBlockParams<Scalar>::random(d, spec.n_heads, spec.ffn(), rng));
    p.final_gamma = MatrixX<Scalar>::Ones(1, d);
    p.final_beta = MatrixX<Scalar>::Zero(1, d);
    p.out_w = MatrixX<Scalar>(d, v);
    nn::fill_normal(p.out_w, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    p.out_b = MatrixX<Scalar>::Zero(1, v);
    return p;
  }

  int max_len() const { return static_cast<int>(positions.rows()) - 1; }
};

template <typename Scalar>
MatrixX<Scalar> caption_memory(const Image<Scalar>& image, const CaptionModelParams<Scalar>& p) {
  MatrixX<Scalar> memory = conv_features(image, p.conv);
  if (memory.rows() > p.memory_positions.rows()) throw InputError("generate_caption: image too large for memory positions");
  memory += p.memory_positions.topRows(memory.rows());
  return memory;
}

/// Next-token logits for the last position of `prefix`.
template <typename Scalar>
VectorX<Scalar> caption_step_logits(std::span<const int> prefix, const MatrixX<Scalar>& memory,
                                    const CaptionModelParams<Scalar>& p) {
  const auto n = static_cast<Eigen::Index>(prefix.size());
  if (n > p.positions.rows()) throw InputError("caption decoder: prefix longer than learned positions");
  MatrixX<Scalar> x(n, p.spec.d_model);
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = p.token_table.row(prefix[static_cast<std::size_t>(i)]) + p.positions.row(i);
  for (const auto& b : p.blocks) x = decoder_block(x, memory, b);
  const MatrixX<Scalar> last = nn::layer_norm(MatrixX<Scalar>(x.bottomRows(1)), p.final_gamma, p.final_beta);
  return nn::linear(last, p.out_w, p.out_b).row(0).transpose();
}

template <typename Scalar>
std::vector<std::string> generate_caption(const Image<Scalar>& image, const CaptionModelParams<Scalar>& p, int max_len) {
  if (max_len < 1) throw InputError("generate_caption: max_len must be >= 1");
  max_len = std::min(max_len, p.max_len());
  const MatrixX<Scalar> memory = caption_memory(image, p);
  const int never[] = {kCaptionStart};
  const auto ids = greedy_decode<Scalar>(
      [&](std::span<const int> prefix) { return caption_step_logits(prefix, memory, p); }, kCaptionStart, kCaptionEnd,
      max_len, never);
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (int id : ids) words.push_back(p.words[static_cast<std::size_t>(id)]);
  return words;
}

}  // namespace memesent::encode
