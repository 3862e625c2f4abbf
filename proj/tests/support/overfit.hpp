#pragma once

// 64 separable synthetic memes pushed through the toy encoders. Every label
// is visible in both modalities: each image quadrant encodes one task by
// brightness and each task contributes one indicative token.

#include "memesent/pipeline.hpp"
#include "memesent/train.hpp"

#include <array>
#include <string>
#include <vector>

namespace memesent::testing {

inline constexpr int kOverfitSamples = 64;
inline constexpr int kOverfitEpochs = 300;
inline constexpr double kOverfitTarget = 0.95;

inline pipeline::FeatureSettings overfit_features(VariantKind v) {
  pipeline::FeatureSettings fs;
  fs.variant = v;
  fs.spec.d_model = 16;
  fs.spec.n_layers = 1;
  fs.spec.n_heads = 2;
  fs.spec.patch_size = 8;
  fs.spec.max_tokens = 8;
  fs.spec.seed = 7;
  fs.max_patches = 16;
  fs.caption_len = 6;
  return fs;
}

inline model::ClassifierConfig overfit_model(int input_width) {
  model::ClassifierConfig cc;
  cc.input_width = input_width;
  cc.hidden = 16;
  cc.head_hidden = 16;
  cc.bilstm_layers = 2;
  return cc;
}

template <typename Scalar>
std::vector<model::TrainingExample<Scalar>> overfit_dataset(VariantKind v) {
  static const std::array<std::array<const char*, 3>, 4> words = {{{"funny", "dull", ""},
                                                                    {"sarcastic", "sincere", ""},
                                                                    {"inspire", "bored", ""},
                                                                    {"happy", "calm", "angry"}}};
  const auto fs = overfit_features(v);
  const auto enc = pipeline::ToyEncoders<Scalar>::make(fs);
  const auto align = fusion::make_alignment<Scalar>(v, enc.widths(), std::nullopt, fs.spec.seed);
  Rng noise(1, "noise");
  std::vector<model::TrainingExample<Scalar>> data;
  for (int i = 0; i < kOverfitSamples; ++i) {
    const std::array<int, 4> lab = {i % 2, (i / 2) % 2, (i / 4) % 2, (i / 8) % 3};
    pipeline::MemeInput<Scalar> m;
    m.id = std::to_string(i);
    encode::Image<Scalar> img(32, 32, 3);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const int q = (y / 16) * 2 + (x / 16);
        const double base = q < 3 ? 0.2 + 0.6 * lab[static_cast<std::size_t>(q)] : 0.1 + 0.4 * lab[3];
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<Scalar>(base + 0.05 * noise.uniform());
      }
    }
    m.image = std::move(img);
    for (std::size_t t = 0; t < 4; ++t) m.tokens.push_back(words[t][static_cast<std::size_t>(lab[t])]);
    m.tokens.push_back("meme");
    const auto fused = fusion::assemble_variant_input(v, pipeline::toy_inputs(enc, m), align);
    model::TrainingExample<Scalar> ex;
    ex.sequence = fused.values;
    ex.labels = {lab[0], lab[1], lab[2], lab[3]};
    data.push_back(std::move(ex));
  }
  return data;
}

/// Variant defaults (batch size and learning rate), 300 epochs, fixed seed.
inline model::TrainConfig overfit_train_config(VariantKind v, int workers = 1) {
  auto tc = model::TrainConfig::for_variant(v);
  tc.epochs = kOverfitEpochs;
  tc.seed = 3;
  tc.workers = workers;
  return tc;
}

/// First epoch where every task's train accuracy is at least the target, or -1.
inline int first_epoch_reaching(const std::vector<model::EpochRecord>& history, double target = kOverfitTarget) {
  for (const auto& e : history) {
    bool ok = true;
    for (double a : e.accuracy) ok = ok && a >= target;
    if (ok) return e.epoch;
  }
  return -1;
}

}  // namespace memesent::testing
