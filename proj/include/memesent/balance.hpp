#pragma once

// SMOTE oversampling over feature vectors. Each synthetic row lies on the
// segment between a class member and one of its k nearest same-class
// neighbours. Originals are kept first and untouched; synthetics follow,
// grouped by class in ascending label order.

#include "memesent/random.hpp"
#include "memesent/types.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace memesent::balance {

template <typename Scalar>
struct LabeledVectors {
  MatrixX<Scalar> features;  // n x d
  std::vector<int> labels;   // n

  Eigen::Index size() const { return features.rows(); }
  void validate() const {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
      throw InputError("labeled vectors: " + std::to_string(features.rows()) + " rows but " +
                       std::to_string(labels.size()) + " labels");
    }
    if (features.rows() > 0 && features.cols() < 1) throw InputError("labeled vectors: width must be >= 1");
  }
};

struct SmoteOptions {
  int k = 5;
  std::uint64_t seed = 0;
  /// Use this interpolation factor for every synthetic row instead of drawing one.
  std::optional<double> fixed_lambda;
};

/// Where a synthetic row came from, as indices into the original rows.
struct SyntheticOrigin {
  std::size_t origin = 0;
  std::size_t neighbor = 0;
  double lambda = 0.0;
};

template <typename Scalar>
struct SmoteResult {
  LabeledVectors<Scalar> data;
  std::vector<SyntheticOrigin> synthetic;  // one per appended row, in order
};

/// The k nearest rows to points.row(query) by Euclidean distance, excluding
/// the query itself. Ties go to the lower index.
template <typename Scalar>
std::vector<std::size_t> knn_indices(const MatrixX<Scalar>& points, std::size_t query, int k) {
  const auto m = static_cast<std::size_t>(points.rows());
  if (query >= m) throw InputError("knn_indices: query index out of range");
  if (k < 1 || static_cast<std::size_t>(k) >= m) {
    throw InputError("knn_indices: k=" + std::to_string(k) + " needs 1 <= k < " + std::to_string(m));
  }
  std::vector<std::pair<Scalar, std::size_t>> dist;
  dist.reserve(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    if (j == query) continue;
    dist.emplace_back((points.row(static_cast<Eigen::Index>(j)) - points.row(static_cast<Eigen::Index>(query))).squaredNorm(), j);
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  std::vector<std::size_t> out;
  for (int i = 0; i < k; ++i) out.push_back(dist[static_cast<std::size_t>(i)].second);
  return out;
}

template <typename Scalar>
std::map<int, std::size_t> class_counts(const LabeledVectors<Scalar>& data) {
  std::map<int, std::size_t> counts;
  for (int y : data.labels) ++counts[y];
  return counts;
}

/// Appends synthetic rows until every class c reaches target_count[c].
/// Classes absent from target_count keep their count.
template <typename Scalar>
SmoteResult<Scalar> smote_oversample(const LabeledVectors<Scalar>& data, const std::map<int, std::size_t>& target_count,
                                     const SmoteOptions& options = {}) {
  data.validate();
  if (options.k < 1) throw InputError("smote: k must be >= 1");
  if (options.fixed_lambda && !(*options.fixed_lambda >= 0.0 && *options.fixed_lambda <= 1.0)) {
    throw InputError("smote: lambda must lie in [0, 1]");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < data.labels.size(); ++i) members[data.labels[i]].push_back(i);

  std::vector<std::pair<int, std::size_t>> plan;  // (class, deficit)
  std::size_t extra = 0;
  for (const auto& [cls, target] : target_count) {
    const auto it = members.find(cls);
    const std::size_t have = it == members.end() ? 0 : it->second.size();
    if (target < have) {
      throw InputError("smote: target " + std::to_string(target) + " for class " + std::to_string(cls) +
                       " is below its current count " + std::to_string(have));
    }
    if (target == have) continue;
    if (have < 2) {
      throw InputError("smote: class " + std::to_string(cls) + " has " + std::to_string(have) +
                       " member(s); at least 2 are needed to synthesize");
    }
    plan.emplace_back(cls, target - have);
    extra += target - have;
  }

  SmoteResult<Scalar> result;
  const Eigen::Index n = data.features.rows();
  result.data.features.resize(n + static_cast<Eigen::Index>(extra), data.features.cols());
  result.data.features.topRows(n) = data.features;
  result.data.labels = data.labels;
  result.synthetic.reserve(extra);

  Rng rng(options.seed, "balance.smote");
  Eigen::Index row = n;
  for (const auto& [cls, deficit] : plan) {
    const auto& idx = members[cls];
    MatrixX<Scalar> pts(static_cast<Eigen::Index>(idx.size()), data.features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(idx[i]));
    const int k = std::min<int>(options.k, static_cast<int>(idx.size()) - 1);
    std::vector<std::vector<std::size_t>> neighbours(idx.size());
    for (std::size_t s = 0; s < deficit; ++s) {
      const auto local = static_cast<std::size_t>(rng.below(idx.size()));
      if (neighbours[local].empty()) neighbours[local] = knn_indices(pts, local, k);
      const std::size_t nn = neighbours[local][static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(k)))];
      const double lambda = options.fixed_lambda ? *options.fixed_lambda : rng.uniform_closed();
      const auto x = pts.row(static_cast<Eigen::Index>(local));
      const auto y = pts.row(static_cast<Eigen::Index>(nn));
      result.data.features.row(row) = x + static_cast<Scalar>(lambda) * (y - x);
      result.data.labels.push_back(cls);
      result.synthetic.push_back({idx[local], idx[nn], lambda});
      ++row;
    }
  }
  return result;
}

/// Oversamples every class up to the largest class count.
template <typename Scalar>
SmoteResult<Scalar> balance_to_majority(const LabeledVectors<Scalar>& data, const SmoteOptions& options = {}) {
  const auto counts = class_counts(data);
  if (counts.size() < 2) throw InputError("balance: at least 2 classes are required");
  std::size_t majority = 0;
  for (const auto& [cls, c] : counts) majority = std::max(majority, c);
  std::map<int, std::size_t> target;
  for (const auto& [cls, c] : counts) target[cls] = majority;
  return smote_oversample(data, target, options);
}

}  // namespace memesent::balance
