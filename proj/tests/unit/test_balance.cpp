#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "memesent/balance.hpp"
#include "support/smote_oracle.hpp"
#include "support/test_support.hpp"

#include <algorithm>
#include <numeric>

using namespace memesent;
using namespace memesent::balance;

namespace {

LabeledVectors<double> random_labeled(Rng& rng, const std::vector<std::pair<int, std::size_t>>& sizes, int d) {
  LabeledVectors<double> out;
  std::size_t n = 0;
  for (const auto& [c, m] : sizes) n += m;
  out.features.resize(static_cast<Eigen::Index>(n), d);
  std::size_t row = 0;
  for (const auto& [c, m] : sizes) {
    for (std::size_t i = 0; i < m; ++i, ++row) {
      for (int j = 0; j < d; ++j) out.features(static_cast<Eigen::Index>(row), j) = rng.normal() + 3.0 * c;
      out.labels.push_back(c);
    }
  }
  // Interleave classes so class members are not contiguous.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm.begin(), perm.end());
  LabeledVectors<double> shuffled;
  shuffled.features.resize(out.features.rows(), d);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.features.row(static_cast<Eigen::Index>(i)) = out.features.row(static_cast<Eigen::Index>(perm[i]));
    shuffled.labels.push_back(out.labels[perm[i]]);
  }
  return shuffled;
}

std::vector<std::size_t> brute_knn(const MatrixX<double>& pts, std::size_t q, int k) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < static_cast<std::size_t>(pts.rows()); ++j) {
    if (j != q) idx.push_back(j);
  }
  const auto dist = [&](std::size_t j) {
    double s = 0;
    for (Eigen::Index c = 0; c < pts.cols(); ++c) {
      const double d = pts(static_cast<Eigen::Index>(j), c) - pts(static_cast<Eigen::Index>(q), c);
      s += d * d;
    }
    return s;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

TEST_CASE("knn on a line") {
  MatrixX<double> pts(3, 2);
  pts << 0, 0, 1, 0, 5, 0;
  CHECK(knn_indices(pts, 0, 1) == std::vector<std::size_t>{1});
  CHECK(knn_indices(pts, 0, 2) == std::vector<std::size_t>{1, 2});
  CHECK_THROWS_AS(knn_indices(pts, 0, 3), InputError);
  CHECK_THROWS_AS(knn_indices(pts, 0, 0), InputError);
}

TEST_CASE("knn matches an exhaustive sort on 100 random points") {
  Rng rng(5);
  MatrixX<double> pts(100, 7);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
  for (std::size_t q = 0; q < 100; ++q) {
    for (int k : {1, 5, 17, 99}) {
      auto got = knn_indices(pts, q, k);
      auto want = brute_knn(pts, q, k);
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      CHECK(got == want);
    }
  }
}

TEST_CASE("midpoint with a forced lambda") {
  LabeledVectors<double> data;
  data.features.resize(4, 2);
  data.features << 0, 0, 1, 1, 9, 9, 8, 8;
  data.labels = {0, 0, 1, 1};
  SmoteOptions opt;
  opt.k = 1;
  opt.fixed_lambda = 0.5;
  const auto r = smote_oversample(data, {{0, 3}, {1, 2}}, opt);
  REQUIRE(r.data.size() == 5);
  CHECK(r.data.features(4, 0) == doctest::Approx(0.5));
  CHECK(r.data.features(4, 1) == doctest::Approx(0.5));
  CHECK(r.data.labels[4] == 0);
}

TEST_CASE("zero deficit leaves the data unchanged") {
  Rng rng(8);
  const auto data = random_labeled(rng, {{0, 6}, {1, 9}}, 3);
  const auto r = smote_oversample(data, {{0, 6}, {1, 9}}, {});
  CHECK(r.synthetic.empty());
  CHECK(r.data.labels == data.labels);
  CHECK(testing::bitwise_equal(r.data.features, data.features));
  const auto balanced = random_labeled(rng, {{0, 5}, {1, 5}}, 3);
  CHECK(balance_to_majority(balanced).synthetic.empty());
}

TEST_CASE("invalid targets are rejected") {
  Rng rng(9);
  const auto data = random_labeled(rng, {{0, 1}, {1, 4}}, 2);
  CHECK_THROWS_AS(smote_oversample(data, {{0, 4}, {1, 4}}, {}), InputError);
  CHECK_THROWS_AS(smote_oversample(data, {{0, 1}, {1, 3}}, {}), InputError);
  const auto single = random_labeled(rng, {{0, 4}}, 2);
  CHECK_THROWS_AS(balance_to_majority(single), InputError);
}

TEST_CASE("three classes balance to the majority") {
  Rng rng(10);
  const auto data = random_labeled(rng, {{0, 10}, {1, 4}, {2, 6}}, 4);
  const auto r = balance_to_majority(data, {.k = 5, .seed = 3, .fixed_lambda = {}});
  const auto counts = class_counts(r.data);
  CHECK(counts.at(0) == 10);
  CHECK(counts.at(1) == 10);
  CHECK(counts.at(2) == 10);
  CHECK(r.synthetic.size() == 10);
}

TEST_CASE("property: balancing is exact, deterministic, keeps originals and stays on segments") {
  Rng gen(31337);
  for (int trial = 0; trial < 40; ++trial) {
    const int classes = 2 + static_cast<int>(gen.below(3));
    std::vector<std::pair<int, std::size_t>> sizes;
    for (int c = 0; c < classes; ++c) sizes.push_back({c, 2 + gen.below(30)});
    const int d = 1 + static_cast<int>(gen.below(8));
    const auto data = random_labeled(gen, sizes, d);
    SmoteOptions opt;
    opt.k = 1 + static_cast<int>(gen.below(6));
    opt.seed = gen.next();

    const auto a = balance_to_majority(data, opt);
    const auto b = balance_to_majority(data, opt);
    CHECK(testing::bitwise_equal(a.data.features, b.data.features));
    CHECK(a.data.labels == b.data.labels);

    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [c, m] : class_counts(a.data)) lo = std::min(lo, m), hi = std::max(hi, m);
    CHECK(lo == hi);

    const auto n = data.features.rows();
    CHECK(testing::bitwise_equal(MatrixX<double>(a.data.features.topRows(n)), data.features));
    for (std::size_t i = 0; i < a.synthetic.size(); ++i) {
      const auto row = n + static_cast<Eigen::Index>(i);
      const auto msg = testing::check_segment_membership(data, a.data.features.row(row),
                                                         a.data.labels[static_cast<std::size_t>(row)],
                                                         a.synthetic[i], opt.k);
      CHECK_MESSAGE(msg.empty(), msg);
    }
  }
}

TEST_CASE("different seeds give different synthetic rows") {
  Rng rng(12);
  const auto data = random_labeled(rng, {{0, 20}, {1, 5}}, 3);
  const auto a = balance_to_majority(data, {.k = 3, .seed = 1, .fixed_lambda = {}});
  const auto b = balance_to_majority(data, {.k = 3, .seed = 2, .fixed_lambda = {}});
  CHECK_FALSE(testing::bitwise_equal(a.data.features, b.data.features));
}
