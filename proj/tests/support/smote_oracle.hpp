#pragma once

#include "memesent/balance.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace memesent::testing {

/// Checks that synthetic row `s` lies on the segment from `origin` to
/// `neighbor` (both original rows of the same class) and that `neighbor` is
/// among the k nearest same-class originals of `origin`, by brute force.
/// Returns an empty string on success, otherwise a description.
inline std::string check_segment_membership(const balance::LabeledVectors<double>& original,
                                            const RowVectorX<double>& s, int label,
                                            const balance::SyntheticOrigin& from, int k,
                                            double tolerance = 1e-9) {
  const auto n = static_cast<std::size_t>(original.features.rows());
  if (from.origin >= n || from.neighbor >= n) return "origin index out of range";
  if (original.labels[from.origin] != label || original.labels[from.neighbor] != label) return "cross-class pair";
  if (from.origin == from.neighbor) return "neighbour equals origin";

  const RowVectorX<double> x = original.features.row(static_cast<Eigen::Index>(from.origin));
  const RowVectorX<double> y = original.features.row(static_cast<Eigen::Index>(from.neighbor));

  // Coordinate-wise lambda recovery on the best-conditioned coordinate,
  // then agreement on every coordinate.
  Eigen::Index best = 0;
  (y - x).cwiseAbs().maxCoeff(&best);
  const double span = y(best) - x(best);
  if (std::abs(span) < 1e-12) return "degenerate segment";
  const double lambda = (s(best) - x(best)) / span;
  if (lambda < -tolerance || lambda > 1.0 + tolerance) return "lambda " + std::to_string(lambda) + " outside [0,1]";
  if (std::abs(lambda - from.lambda) > tolerance) return "recovered lambda disagrees with the recorded one";
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    const double expect = x(j) + lambda * (y(j) - x(j));
    if (std::abs(s(j) - expect) > tolerance * std::max(1.0, std::abs(expect))) {
      return "coordinate " + std::to_string(j) + " off the segment";
    }
  }

  std::vector<double> dists;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == from.origin || original.labels[j] != label) continue;
    dists.push_back((original.features.row(static_cast<Eigen::Index>(j)) - x).squaredNorm());
  }
  const int kk = std::min<int>(k, static_cast<int>(dists.size()));
  std::nth_element(dists.begin(), dists.begin() + (kk - 1), dists.end());
  const double kth = dists[static_cast<std::size_t>(kk - 1)];
  if ((y - x).squaredNorm() > kth) return "neighbour is not among the k nearest";
  return {};
}

}  // namespace memesent::testing
