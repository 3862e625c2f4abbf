#pragma once

// Per-class brute-force metric oracles. They recount TP, FP and FN by
// walking every cell rather than using row/column sums.

#include "memesent/evalmetrics.hpp"
#include "memesent/random.hpp"

namespace memesent::testing {

inline double oracle_macro_f1(const eval::ConfusionMatrix& cm) {
  const int k = cm.classes();
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (int t = 0; t < k; ++t) {
      for (int p = 0; p < k; ++p) {
        const auto n = static_cast<double>(cm.at(t, p));
        if (t == c && p == c) tp += n;
        else if (p == c) fp += n;
        else if (t == c) fn += n;
      }
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    sum += precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / k;
}

inline double oracle_accuracy(const eval::ConfusionMatrix& cm) {
  double correct = 0, total = 0;
  for (int t = 0; t < cm.classes(); ++t) {
    for (int p = 0; p < cm.classes(); ++p) {
      total += static_cast<double>(cm.at(t, p));
      if (t == p) correct += static_cast<double>(cm.at(t, p));
    }
  }
  return correct / total;
}

/// 2 or 3 classes; cells are sometimes zero so that zero-denominator paths
/// are exercised, occasionally the whole matrix.
inline eval::ConfusionMatrix random_confusion(Rng& rng) {
  const int k = 2 + static_cast<int>(rng.below(2));
  eval::ConfusionMatrix cm(k);
  const std::uint64_t scale = 1 + rng.below(1000);
  const bool sparse = rng.below(4) == 0;
  for (int t = 0; t < k; ++t) {
    for (int p = 0; p < k; ++p) {
      if (sparse && rng.below(2) == 0) continue;
      cm.at(t, p) = static_cast<std::size_t>(rng.below(scale));
    }
  }
  return cm;
}

}  // namespace memesent::testing
