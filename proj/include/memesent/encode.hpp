#pragma once

// From-scratch toy encoders: a patch-based image transformer, a token
// transformer with a learned null token for empty text, and a mean-pooled
// sentence encoder projecting to 768 dimensions. Parameters are immutable
// after construction; encoding is a pure function of (input, params).

#include "memesent/nn.hpp"
#include "memesent/random.hpp"
#include "memesent/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace memesent::encode {

inline constexpr int kSentenceWidth = 768;

struct EncoderSpec {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int patch_size = 16;
  int max_tokens = 32;
  int ffn_width = 0;  // 0 -> 4 * d_model
  std::uint64_t seed = 0;

  int ffn() const { return ffn_width > 0 ? ffn_width : 4 * d_model; }

  void validate() const {
    if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
      throw InputError("encoder spec: d_model must be a positive multiple of n_heads");
    }
    if (patch_size < 1) throw InputError("encoder spec: patch_size must be >= 1");
    if (max_tokens < 1) throw InputError("encoder spec: max_tokens must be >= 1");
    if (n_layers < 0) throw InputError("encoder spec: n_layers must be >= 0");
  }
};

/// H x W x C image, stored row-major with channels innermost.
template <typename Scalar>
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<Scalar> data;

  Image() = default;
  Image(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, Scalar(0)) {}

  Scalar& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  Scalar at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

/// One row per p x p block (blocks in row-major order), each row the
/// row-major flattening of the block's (y, x, c) values.
template <typename Scalar>
MatrixX<Scalar> patchify(const Image<Scalar>& image, int patch_size) {
  const int p = patch_size;
  if (p < 1) throw InputError("patchify: patch size must be >= 1");
  if (image.height % p != 0 || image.width % p != 0) {
    throw InputError("patchify: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                     " is not divisible by patch size " + std::to_string(p));
  }
  const int rows = image.height / p;
  const int cols = image.width / p;
  const int c = image.channels;
  MatrixX<Scalar> out(rows * cols, p * p * c);
  for (int by = 0; by < rows; ++by) {
    for (int bx = 0; bx < cols; ++bx) {
      const int r = by * cols + bx;
      int k = 0;
      for (int y = 0; y < p; ++y) {
        for (int x = 0; x < p; ++x) {
          for (int ch = 0; ch < c; ++ch) out(r, k++) = image.at(by * p + y, bx * p + x, ch);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
MatrixX<Scalar> run_blocks(MatrixX<Scalar> x, const std::vector<nn::TransformerBlockParams<Scalar>>& blocks) {
  for (const auto& b : blocks) x = nn::transformer_block(x, b);
  return x;
}

template <typename Scalar>
std::vector<nn::TransformerBlockParams<Scalar>> random_blocks(const EncoderSpec& spec, Rng& rng) {
  std::vector<nn::TransformerBlockParams<Scalar>> blocks;
  for (int i = 0; i < spec.n_layers; ++i) {
    blocks.push_back(nn::TransformerBlockParams<Scalar>::random(spec.d_model, spec.n_heads, spec.ffn(), rng));
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// Image encoder

template <typename Scalar>
struct ImageEncoderParams {
  EncoderSpec spec;
  int channels = 3;
  MatrixX<Scalar> patch_w;    // (p*p*C) x d
  MatrixX<Scalar> patch_b;    // 1 x d
  MatrixX<Scalar> positions;  // max_patches x d
  std::vector<nn::TransformerBlockParams<Scalar>> blocks;

  static ImageEncoderParams random(const EncoderSpec& spec, int channels, int max_patches) {
    spec.validate();
    Rng rng(spec.seed, "encode.image");
    ImageEncoderParams p;
    p.spec = spec;
    p.channels = channels;
    const int patch_dim = spec.patch_size * spec.patch_size * channels;
    p.patch_w = MatrixX<Scalar>(patch_dim, spec.d_model);
    nn::fill_normal(p.patch_w, rng, 1.0 / std::sqrt(static_cast<double>(patch_dim)));
    p.patch_b = MatrixX<Scalar>::Zero(1, spec.d_model);
    p.positions = MatrixX<Scalar>(max_patches, spec.d_model);
    nn::fill_normal(p.positions, rng, 0.5);
    p.blocks = random_blocks<Scalar>(spec, rng);
    return p;
  }

  int max_patches() const { return static_cast<int>(positions.rows()); }
};

/// patchify -> linear patch embedding -> + positions -> transformer blocks.
template <typename Scalar>
MatrixX<Scalar> encode_image(const Image<Scalar>& image, const ImageEncoderParams<Scalar>& params) {
  if (image.channels != params.channels) throw InputError("encode_image: channel count mismatch");
  const MatrixX<Scalar> patches = patchify(image, params.spec.patch_size);
  if (patches.rows() > params.max_patches()) {
    throw InputError("encode_image: " + std::to_string(patches.rows()) + " patches exceed the " +
                     std::to_string(params.max_patches()) + " learned positions");
  }
  MatrixX<Scalar> x = nn::linear(patches, params.patch_w, params.patch_b);
  x += params.positions.topRows(x.rows());
  return run_blocks(std::move(x), params.blocks);
}

// ---------------------------------------------------------------------------
// Token encoder

inline constexpr int kDefaultTokenBuckets = 4096;

/// Words map to embedding rows by hashing, so no vocabulary file is needed.
inline int token_bucket(std::string_view word, int buckets) {
  return static_cast<int>(fnv1a64(word) % static_cast<std::uint64_t>(buckets));
}

template <typename Scalar>
struct TokenEncoderParams {
  EncoderSpec spec;
  MatrixX<Scalar> table;      // buckets x d
  MatrixX<Scalar> null_row;   // 1 x d, stands in for empty text
  MatrixX<Scalar> positions;  // max_tokens x d
  std::vector<nn::TransformerBlockParams<Scalar>> blocks;

  static TokenEncoderParams random(const EncoderSpec& spec, int buckets = kDefaultTokenBuckets) {
    spec.validate();
    Rng rng(spec.seed, "encode.tokens");
    TokenEncoderParams p;
    p.spec = spec;
    p.table = MatrixX<Scalar>(buckets, spec.d_model);
    nn::fill_normal(p.table, rng, 1.0);
    p.null_row = MatrixX<Scalar>(1, spec.d_model);
    nn::fill_normal(p.null_row, rng, 1.0);
    p.positions = MatrixX<Scalar>(spec.max_tokens, spec.d_model);
    nn::fill_normal(p.positions, rng, 0.5);
    p.blocks = random_blocks<Scalar>(spec, rng);
    return p;
  }

  int buckets() const { return static_cast<int>(table.rows()); }
};

/// Embedding lookup + positions -> blocks. Input longer than max_tokens is
/// truncated; an empty input yields the single null row.
template <typename Scalar>
MatrixX<Scalar> encode_token_ids(std::span<const int> ids, const TokenEncoderParams<Scalar>& params) {
  const auto n = std::min<std::size_t>(ids.size(), static_cast<std::size_t>(params.spec.max_tokens));
  MatrixX<Scalar> x;
  if (n == 0) {
    x = params.null_row + params.positions.topRows(1);
  } else {
    x.resize(static_cast<Eigen::Index>(n), params.spec.d_model);
    for (std::size_t i = 0; i < n; ++i) {
      const int id = ids[i];
      if (id < 0 || id >= params.buckets()) throw InputError("encode_token_ids: id out of range");
      x.row(static_cast<Eigen::Index>(i)) = params.table.row(id) + params.positions.row(static_cast<Eigen::Index>(i));
    }
  }
  return run_blocks(std::move(x), params.blocks);
}

template <typename Scalar>
MatrixX<Scalar> encode_tokens(const std::vector<std::string>& tokens, const TokenEncoderParams<Scalar>& params) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(token_bucket(t, params.buckets()));
  return encode_token_ids<Scalar>(ids, params);
}

// ---------------------------------------------------------------------------
// Sentence encoder

template <typename Scalar>
RowVectorX<Scalar> mean_pool(const MatrixX<Scalar>& sequence) {
  return sequence.colwise().mean();
}

template <typename Scalar>
struct SentenceEncoderParams {
  TokenEncoderParams<Scalar> tokens;
  MatrixX<Scalar> proj_w;  // d x 768
  MatrixX<Scalar> proj_b;  // 1 x 768

  static SentenceEncoderParams random(const EncoderSpec& spec, int buckets = kDefaultTokenBuckets) {
    SentenceEncoderParams p;
    p.tokens = TokenEncoderParams<Scalar>::random(spec, buckets);
    Rng rng(spec.seed, "encode.sentence");
    p.proj_w = MatrixX<Scalar>(spec.d_model, kSentenceWidth);
    nn::fill_normal(p.proj_w, rng, 1.0 / std::sqrt(static_cast<double>(spec.d_model)));
    p.proj_b = MatrixX<Scalar>::Zero(1, kSentenceWidth);
    return p;
  }
};

/// Mean of the token rows, projected to 768 dimensions (returned as 1 x 768).
template <typename Scalar>
MatrixX<Scalar> encode_sentence(const std::vector<std::string>& tokens, const SentenceEncoderParams<Scalar>& params) {
  const MatrixX<Scalar> pooled = mean_pool(encode_tokens(tokens, params.tokens));
  return nn::linear(pooled, params.proj_w, params.proj_b);
}

}  // namespace memesent::encode
