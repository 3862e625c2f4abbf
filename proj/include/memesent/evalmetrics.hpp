#pragma once

#include "memesent/types.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace memesent::eval {

/// K x K counts, rows = true class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k = 2);

  int classes() const { return k_; }
  std::size_t at(int truth, int predicted) const { return counts_[index(truth, predicted)]; }
  std::size_t& at(int truth, int predicted) { return counts_[index(truth, predicted)]; }
  std::size_t total() const;
  std::size_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t index(int truth, int predicted) const;

  int k_;
  std::vector<std::size_t> counts_;
};

/// Tallies (truth, predicted) pairs. Throws InputError on a length mismatch
/// or a label outside [0, k).
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int k);

/// Mean of per-class F1. Precision, recall and F1 are 0 when their
/// denominators are 0.
double macro_f1(const ConfusionMatrix& cm);

/// trace / total; throws InputError for an empty matrix.
double accuracy(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Reports in the layout of the results tables: one row per task, one column
// per variant, values in percent with two decimals.

using TaskLabelMap = std::map<Task, std::vector<int>>;

struct VariantPredictions {
  VariantKind variant;
  TaskLabelMap predicted;
};

struct ReportCell {
  double accuracy = 0.0;  // percent, rounded to 2 decimals
  double macro_f1 = 0.0;
};

struct EvalReport {
  std::vector<VariantKind> variants;
  std::vector<Task> tasks;
  std::map<VariantKind, std::map<Task, ReportCell>> cells;

  const ReportCell& cell(VariantKind v, Task t) const;
  /// Mean over tasks of the (rounded) cells.
  double average_accuracy(VariantKind v) const;
  double average_macro_f1(VariantKind v) const;
};

/// Rounds a fraction in [0,1] to a percentage with two decimals.
double to_percent(double fraction);

/// Every variant is scored against the same gold labels. Tasks are those in
/// `gold`, in task order; each variant must predict all of them.
EvalReport build_report(const std::vector<VariantPredictions>& predictions, const TaskLabelMap& gold);

/// Two tables (accuracy, macro F1) with an AVERAGE row.
std::string format_report_text(const EvalReport& report);

/// {"IMGSEN": {"humor": {"accuracy": .., "macro_f1": ..}, ..}, .., "averages": {"IMGSEN": {..}}}
std::string format_report_json(const EvalReport& report);

}  // namespace memesent::eval
