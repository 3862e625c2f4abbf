#pragma once

#include "memesent/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memesent::dataset {

// Class indices are fixed per task and shared with the classifier heads:
//   humor:      0 funny,        1 not_funny
//   sarcasm:    0 sarcastic,    1 not_sarcastic
//   motivation: 0 motivational, 1 not_motivational
//   sentiment:  0 positive,     1 neutral,  2 negative
enum class Humor : std::uint8_t { funny, not_funny };
enum class Sarcasm : std::uint8_t { sarcastic, not_sarcastic };
enum class Motivation : std::uint8_t { motivational, not_motivational };
enum class Sentiment : std::uint8_t { positive, neutral, negative };

struct LabelSet {
  Humor humor = Humor::funny;
  Sarcasm sarcasm = Sarcasm::sarcastic;
  Motivation motivation = Motivation::motivational;
  Sentiment sentiment = Sentiment::positive;

  int index(Task t) const;
  void set(Task t, int class_index);

  bool operator==(const LabelSet&) const = default;
};

/// Class names for a task in index order.
const std::vector<std::string>& class_names(Task t);
/// Index of `name` among class_names(t), or nullopt.
std::optional<int> class_index(Task t, std::string_view name);

/// Column of the three-way summary table a source label is counted under.
enum class SummaryColumn : std::uint8_t { positive, negative, neutral };

struct MemeRecord {
  std::string id;
  std::string image_ref;
  std::string text;
  LabelSet labels;
  /// Summary-table column per task, resolved from the raw source label.
  std::array<SummaryColumn, 4> summary{};
};

struct ClassDistribution {
  Task task = Task::humor;
  /// class name -> count, in class index order.
  std::vector<std::pair<std::string, std::size_t>> counts;

  std::size_t total() const;
  std::size_t count(std::string_view cls) const;
};

/// Source-column names and the raw-label -> class mapping.
///
/// JSON layout:
///   {
///     "format":  "csv" | "jsonl"              (optional; inferred from extension)
///     "columns": {"image_name": "...", "text": "...", "humour": "...",
///                 "sarcasm": "...", "motivational": "...",
///                 "overall_sentiment": "...", "id": "..."}   (all optional)
///     "labels":  {"humor": {"raw": "funny", ...}, "sarcasm": {...},
///                 "motivation": {...}, "sentiment": {...}}    (required)
///     "summary": {"humor": {"raw": "positive|negative|neutral"}, ...}  (optional)
///   }
/// The id column defaults to image_name. When a raw label has no "summary"
/// entry its summary column follows its class (funny/sarcastic/motivational/
/// positive -> positive, neutral -> neutral, everything else -> negative).
struct Schema {
  enum class Format { csv, jsonl, infer };
  Format format = Format::infer;
  std::string id_column = "image_name";
  std::string image_column = "image_name";
  std::string text_column = "text";
  std::array<std::string, 4> label_columns = {"humour", "sarcasm", "motivational",
                                              "overall_sentiment"};
  std::array<std::map<std::string, int, std::less<>>, 4> label_map;
  std::array<std::map<std::string, SummaryColumn, std::less<>>, 4> summary_map;

  static Schema from_json_text(std::string_view json_text);
  static Schema from_file(const std::filesystem::path& path);
};

/// Error carrying the 0-based data row index (header excluded).
class RowError : public InputError {
 public:
  RowError(std::size_t row, const std::string& message);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Error naming a required column absent from the source.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

std::vector<MemeRecord> load_dataset(const std::filesystem::path& path, const Schema& schema);
/// Parses from memory; `format` must be csv or jsonl.
std::vector<MemeRecord> parse_dataset(std::string_view content, Schema::Format format,
                                      const Schema& schema);

ClassDistribution class_distribution(const std::vector<MemeRecord>& records, Task task);

/// Counts per summary column (positive, negative, neutral) for one task.
std::array<std::size_t, 3> summary_counts(const std::vector<MemeRecord>& records, Task task);

struct DatasetSplit {
  std::vector<MemeRecord> train;
  std::vector<MemeRecord> test;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

/// Seeded uniform shuffle, then the first floor(ratio * n) records go to train.
DatasetSplit split(const std::vector<MemeRecord>& records, double ratio, std::uint64_t seed);

/// Number of training records for a split of n; floor(ratio * n) evaluated
/// without the float rounding that turns 0.8 * 10 into 7.999...
std::size_t train_size(std::size_t n, double ratio);

}  // namespace memesent::dataset
