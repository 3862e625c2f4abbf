#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memesent {

// Sequences are stored one row per position, so row-major keeps each
// position contiguous (patch flattening, row concatenation, per-row ops).
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Bad input or configuration: schema errors, malformed rows, shape mismatches.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { humor = 0, sarcasm = 1, motivation = 2, sentiment = 3 };

inline constexpr std::array<Task, 4> kAllTasks = {Task::humor, Task::sarcasm, Task::motivation,
                                                  Task::sentiment};

/// Number of classes predicted per task: two for the binary tasks, three for sentiment.
constexpr int task_arity(Task t) { return t == Task::sentiment ? 3 : 2; }

constexpr std::string_view task_name(Task t) {
  switch (t) {
    case Task::humor: return "humor";
    case Task::sarcasm: return "sarcasm";
    case Task::motivation: return "motivation";
    case Task::sentiment: return "sentiment";
  }
  return "";
}

/// Row headings used in the summary and report tables.
constexpr std::string_view task_heading(Task t) {
  switch (t) {
    case Task::humor: return "HUMOR";
    case Task::sarcasm: return "SARCASM";
    case Task::motivation: return "MOTIVATION";
    case Task::sentiment: return "OVERALL SENTIMENT";
  }
  return "";
}

Task parse_task(std::string_view name);

enum class VariantKind { imgtxt, imgsen, capsen };

std::string_view variant_name(VariantKind v);          // "imgtxt" ...
std::string_view variant_heading(VariantKind v);       // "IMGTXT" ...
VariantKind parse_variant(std::string_view name);      // case-insensitive

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace memesent
