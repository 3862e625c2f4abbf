#pragma once

// Glue between encoders, fusion and the classifier: builds the fused
// sequence for one meme from either the toy encoders or imported embedding
// tables, and converts sequences to and from the flat vectors SMOTE works on.

#include "memesent/caption.hpp"
#include "memesent/embeddings_io.hpp"
#include "memesent/encode.hpp"
#include "memesent/fusion.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memesent::pipeline {

struct FeatureSettings {
  VariantKind variant = VariantKind::imgsen;
  encode::EncoderSpec spec;
  std::optional<int> fusion_width;  // unset: the wider of the two sides
  int channels = 3;
  int max_patches = 196;
  int caption_len = 16;
};

/// Which side representations a variant consumes.
struct Needs {
  bool image = false, tokens = false, sentence = false, caption = false;
};

constexpr Needs needs(VariantKind v) {
  switch (v) {
    case VariantKind::imgtxt: return {true, true, false, false};
    case VariantKind::imgsen: return {true, false, true, false};
    case VariantKind::capsen: return {false, false, true, true};
  }
  return {};
}

template <typename Scalar>
struct ToyEncoders {
  FeatureSettings settings;
  std::optional<encode::ImageEncoderParams<Scalar>> image;
  std::optional<encode::TokenEncoderParams<Scalar>> tokens;
  std::optional<encode::SentenceEncoderParams<Scalar>> sentence;
  std::optional<encode::CaptionModelParams<Scalar>> caption;

  /// Builds only the encoders the variant needs; each draws from its own
  /// seeded stream, so the set built does not change any of their weights.
  static ToyEncoders make(const FeatureSettings& s) {
    s.spec.validate();
    ToyEncoders e;
    e.settings = s;
    const auto n = needs(s.variant);
    if (n.image) e.image = encode::ImageEncoderParams<Scalar>::random(s.spec, s.channels, s.max_patches);
    if (n.tokens) e.tokens = encode::TokenEncoderParams<Scalar>::random(s.spec);
    if (n.sentence || n.caption) e.sentence = encode::SentenceEncoderParams<Scalar>::random(s.spec);
    if (n.caption) e.caption = encode::CaptionModelParams<Scalar>::random(s.spec, s.channels, s.caption_len);
    return e;
  }

  /// Widths of the (first, second) fusion sides before alignment.
  fusion::SideWidths widths() const {
    const int d = settings.spec.d_model;
    switch (settings.variant) {
      case VariantKind::imgtxt: return {d, d};
      case VariantKind::imgsen: return {d, encode::kSentenceWidth};
      case VariantKind::capsen: return {encode::kSentenceWidth, encode::kSentenceWidth};
    }
    return {};
  }
};

template <typename Scalar>
struct MemeInput {
  std::string id;
  std::optional<encode::Image<Scalar>> image;
  std::vector<std::string> tokens;
};

template <typename Scalar>
fusion::VariantInputs<Scalar> toy_inputs(const ToyEncoders<Scalar>& enc, const MemeInput<Scalar>& meme) {
  const auto n = needs(enc.settings.variant);
  fusion::VariantInputs<Scalar> in;
  if (n.image || n.caption) {
    if (!meme.image) throw InputError("meme '" + meme.id + "': " + std::string(variant_heading(enc.settings.variant)) + " needs an image");
  }
  if (n.image) in.image = encode::encode_image(*meme.image, *enc.image);
  if (n.tokens) in.tokens = encode::encode_tokens(meme.tokens, *enc.tokens);
  if (n.sentence) in.sentence = encode::encode_sentence(meme.tokens, *enc.sentence);
  if (n.caption) {
    const auto words = encode::generate_caption(*meme.image, *enc.caption, enc.settings.caption_len);
    in.caption = encode::encode_sentence(words, *enc.sentence);
  }
  return in;
}

/// Imported embeddings keyed by role: "image", "tokens", "sentence", "caption".
using EmbeddingSources = std::map<std::string, encode::EmbeddingTable, std::less<>>;

inline const encode::EmbeddingTable& require_role(const EmbeddingSources& src, const std::string& role, VariantKind v) {
  const auto it = src.find(role);
  if (it == src.end()) {
    throw InputError(std::string(variant_heading(v)) + " needs '" + role + "' embeddings (--embeddings " + role + "=FILE)");
  }
  return it->second;
}

inline fusion::SideWidths external_widths(VariantKind v, const EmbeddingSources& src) {
  switch (v) {
    case VariantKind::imgtxt: return {require_role(src, "image", v).d, require_role(src, "tokens", v).d};
    case VariantKind::imgsen: return {require_role(src, "image", v).d, require_role(src, "sentence", v).d};
    case VariantKind::capsen: return {require_role(src, "caption", v).d, require_role(src, "sentence", v).d};
  }
  return {};
}

template <typename Scalar>
fusion::VariantInputs<Scalar> external_inputs(VariantKind v, const EmbeddingSources& src, const std::string& id) {
  const auto n = needs(v);
  fusion::VariantInputs<Scalar> in;
  const auto get = [&](const char* role) -> MatrixX<Scalar> { return require_role(src, role, v).at(id).template cast<Scalar>(); };
  if (n.image) in.image = get("image");
  if (n.tokens) in.tokens = get("tokens");
  if (n.sentence) in.sentence = get("sentence");
  if (n.caption) in.caption = get("caption");
  return in;
}

/// Zero rows appended (or trailing rows dropped) to reach exactly `rows`.
template <typename Scalar>
MatrixX<Scalar> fit_rows(const MatrixX<Scalar>& seq, Eigen::Index rows) {
  if (seq.rows() == rows) return seq;
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(rows, seq.cols());
  const Eigen::Index keep = std::min(rows, seq.rows());
  out.topRows(keep) = seq.topRows(keep);
  return out;
}

template <typename Scalar>
RowVectorX<Scalar> flatten(const MatrixX<Scalar>& seq) {
  return Eigen::Map<const RowVectorX<Scalar>>(seq.data(), seq.size());
}

template <typename Scalar>
MatrixX<Scalar> unflatten(const Eigen::Ref<const RowVectorX<Scalar>>& flat, Eigen::Index rows, Eigen::Index cols) {
  if (flat.size() != rows * cols) throw InputError("unflatten: size mismatch");
  MatrixX<Scalar> out(rows, cols);
  for (Eigen::Index i = 0; i < flat.size(); ++i) out.data()[i] = flat(i);
  return out;
}

}  // namespace memesent::pipeline
