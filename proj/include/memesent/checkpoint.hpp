#pragma once

// Checkpoint files: a magic line, one JSON header line (variant, model
// dimensions, seed, epoch, tensor manifest, free-form metadata), then the
// tensors as one little-endian row-major blob in manifest order. Float models
// are stored as f32, double models as f64, so reloading is exact either way.

#include "memesent/classifier.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace memesent::model {

struct CheckpointInfo {
  VariantKind variant = VariantKind::imgsen;
  ClassifierConfig config;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::string dtype;  // "f32" or "f64"; filled in on read
  std::map<std::string, std::string> metadata;
};

template <typename Scalar>
void save_checkpoint(const std::string& path, const ClassifierParams<Scalar>& params, const CheckpointInfo& info);

/// Throws InputError on a malformed file or a manifest that does not match
/// the shapes implied by the header's model configuration.
template <typename Scalar>
ClassifierParams<Scalar> load_checkpoint(const std::string& path, CheckpointInfo* info = nullptr);

/// Reads only the header.
CheckpointInfo read_checkpoint_info(const std::string& path);

extern template void save_checkpoint<float>(const std::string&, const ClassifierParams<float>&, const CheckpointInfo&);
extern template void save_checkpoint<double>(const std::string&, const ClassifierParams<double>&, const CheckpointInfo&);
extern template ClassifierParams<float> load_checkpoint<float>(const std::string&, CheckpointInfo*);
extern template ClassifierParams<double> load_checkpoint<double>(const std::string&, CheckpointInfo*);

}  // namespace memesent::model
