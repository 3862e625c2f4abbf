#include "memesent/dataset.hpp"

#include "csv.hpp"
#include "memesent/random.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace memesent::dataset {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kLogicalLabelColumns = {"humour", "sarcasm",
                                                                  "motivational",
                                                                  "overall_sentiment"};

SummaryColumn default_summary(Task t, int cls) {
  if (t == Task::sentiment) {
    switch (static_cast<Sentiment>(cls)) {
      case Sentiment::positive: return SummaryColumn::positive;
      case Sentiment::neutral: return SummaryColumn::neutral;
      case Sentiment::negative: return SummaryColumn::negative;
    }
  }
  return cls == 0 ? SummaryColumn::positive : SummaryColumn::negative;
}

SummaryColumn parse_summary(std::string_view s) {
  if (s == "positive") return SummaryColumn::positive;
  if (s == "negative") return SummaryColumn::negative;
  if (s == "neutral") return SummaryColumn::neutral;
  throw InputError("schema: summary column must be positive, negative or neutral, got '" +
                   std::string(s) + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One source row as logical-column lookups.
struct RowView {
  virtual ~RowView() = default;
  virtual const std::string* get(std::string_view column) const = 0;
};

MemeRecord build_record(const RowView& row, std::size_t index, const Schema& schema) {
  auto field = [&](const std::string& column) -> const std::string& {
    const std::string* v = row.get(column);
    if (v == nullptr) throw RowError(index, "missing value for column '" + column + "'");
    return *v;
  };
  MemeRecord r;
  r.id = field(schema.id_column);
  if (r.id.empty()) throw RowError(index, "empty id");
  r.image_ref = field(schema.image_column);
  r.text = field(schema.text_column);
  for (Task t : kAllTasks) {
    const auto ti = static_cast<std::size_t>(t);
    const std::string& raw = field(schema.label_columns[ti]);
    const auto& mapping = schema.label_map[ti];
    auto it = mapping.find(raw);
    if (it == mapping.end()) {
      throw RowError(index, "label '" + raw + "' in column '" + schema.label_columns[ti] +
                                "' has no mapping for task " + std::string(task_name(t)));
    }
    r.labels.set(t, it->second);
    auto sit = schema.summary_map[ti].find(raw);
    r.summary[ti] = sit != schema.summary_map[ti].end() ? sit->second
                                                        : default_summary(t, it->second);
  }
  return r;
}

std::vector<std::string> required_columns(const Schema& schema) {
  std::vector<std::string> cols = {schema.id_column, schema.image_column, schema.text_column};
  cols.insert(cols.end(), schema.label_columns.begin(), schema.label_columns.end());
  return cols;
}

void check_unique(const std::vector<MemeRecord>& records) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!seen.insert(records[i].id).second) {
      throw RowError(i, "duplicate id '" + records[i].id + "'");
    }
  }
}

std::vector<MemeRecord> parse_csv_dataset(std::string_view content, const Schema& schema) {
  auto rows = detail::parse_csv(content);
  if (rows.empty()) throw SchemaError("dataset has no header row");
  const auto& header = rows.front();
  std::map<std::string, std::size_t, std::less<>> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    if (i == 0 && name.starts_with("\xEF\xBB\xBF")) name.erase(0, 3);
    position.emplace(std::move(name), i);
  }
  for (const auto& col : required_columns(schema)) {
    if (!position.contains(col)) throw SchemaError("missing column '" + col + "'");
  }

  struct CsvRow : RowView {
    const std::vector<std::string>* cells = nullptr;
    const std::map<std::string, std::size_t, std::less<>>* pos = nullptr;
    const std::string* get(std::string_view column) const override {
      auto it = pos->find(column);
      if (it == pos->end() || it->second >= cells->size()) return nullptr;
      return &(*cells)[it->second];
    }
  };

  std::vector<MemeRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() == 1 && rows[i][0].empty()) continue;  // blank line
    CsvRow view;
    view.cells = &rows[i];
    view.pos = &position;
    records.push_back(build_record(view, records.size(), schema));
  }
  check_unique(records);
  return records;
}

std::vector<MemeRecord> parse_jsonl_dataset(std::string_view content, const Schema& schema) {
  struct JsonRow : RowView {
    std::map<std::string, std::string, std::less<>> values;
    const std::string* get(std::string_view column) const override {
      auto it = values.find(column);
      return it == values.end() ? nullptr : &it->second;
    }
  };

  std::vector<MemeRecord> records;
  std::istringstream in{std::string(content)};
  std::string line;
  bool checked_columns = false;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t index = records.size();
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw RowError(index, std::string("invalid json: ") + e.what());
    }
    if (!obj.is_object()) throw RowError(index, "expected a json object");
    JsonRow row;
    for (auto& [key, value] : obj.items()) {
      row.values[key] = value.is_string() ? value.get<std::string>()
                        : value.is_null() ? std::string()
                                          : value.dump();
    }
    if (!checked_columns) {
      for (const auto& col : required_columns(schema)) {
        if (!row.values.contains(col)) throw SchemaError("missing column '" + col + "'");
      }
      checked_columns = true;
    }
    records.push_back(build_record(row, index, schema));
  }
  check_unique(records);
  return records;
}

}  // namespace

int LabelSet::index(Task t) const {
  switch (t) {
    case Task::humor: return static_cast<int>(humor);
    case Task::sarcasm: return static_cast<int>(sarcasm);
    case Task::motivation: return static_cast<int>(motivation);
    case Task::sentiment: return static_cast<int>(sentiment);
  }
  return -1;
}

void LabelSet::set(Task t, int c) {
  if (c < 0 || c >= task_arity(t)) throw InputError("class index out of range");
  switch (t) {
    case Task::humor: humor = static_cast<Humor>(c); break;
    case Task::sarcasm: sarcasm = static_cast<Sarcasm>(c); break;
    case Task::motivation: motivation = static_cast<Motivation>(c); break;
    case Task::sentiment: sentiment = static_cast<Sentiment>(c); break;
  }
}

const std::vector<std::string>& class_names(Task t) {
  static const std::array<std::vector<std::string>, 4> names = {{
      {"funny", "not_funny"},
      {"sarcastic", "not_sarcastic"},
      {"motivational", "not_motivational"},
      {"positive", "neutral", "negative"},
  }};
  return names[static_cast<std::size_t>(t)];
}

std::optional<int> class_index(Task t, std::string_view name) {
  const auto& names = class_names(t);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::size_t ClassDistribution::total() const {
  std::size_t s = 0;
  for (const auto& [_, c] : counts) s += c;
  return s;
}

std::size_t ClassDistribution::count(std::string_view cls) const {
  for (const auto& [name, c] : counts) {
    if (name == cls) return c;
  }
  throw InputError("unknown class '" + std::string(cls) + "'");
}

Schema Schema::from_json_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("schema: invalid json: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("schema: expected a json object");

  Schema s;
  if (j.contains("format")) {
    const auto f = j.at("format").get<std::string>();
    if (f == "csv") s.format = Format::csv;
    else if (f == "jsonl") s.format = Format::jsonl;
    else throw SchemaError("schema: unknown format '" + f + "'");
  }
  if (j.contains("columns")) {
    const auto& cols = j.at("columns");
    auto pick = [&](std::string_view logical, std::string& target) {
      if (cols.contains(logical)) target = cols.at(logical).get<std::string>();
    };
    pick("image_name", s.image_column);
    s.id_column = s.image_column;
    pick("id", s.id_column);
    pick("text", s.text_column);
    for (std::size_t i = 0; i < 4; ++i) pick(kLogicalLabelColumns[i], s.label_columns[i]);
  }
  if (!j.contains("labels")) throw SchemaError("schema: missing 'labels' mapping");
  for (auto& [task_key, mapping] : j.at("labels").items()) {
    const Task t = parse_task(task_key);
    const auto ti = static_cast<std::size_t>(t);
    for (auto& [raw, cls] : mapping.items()) {
      const auto name = cls.get<std::string>();
      auto idx = class_index(t, name);
      if (!idx) {
        throw SchemaError("schema: '" + name + "' is not a class of task " +
                          std::string(task_name(t)));
      }
      s.label_map[ti][raw] = *idx;
    }
  }
  for (Task t : kAllTasks) {
    if (s.label_map[static_cast<std::size_t>(t)].empty()) {
      throw SchemaError("schema: no label mapping for task " + std::string(task_name(t)));
    }
  }
  if (j.contains("summary")) {
    for (auto& [task_key, mapping] : j.at("summary").items()) {
      const auto ti = static_cast<std::size_t>(parse_task(task_key));
      for (auto& [raw, col] : mapping.items()) {
        s.summary_map[ti][raw] = parse_summary(col.get<std::string>());
      }
    }
  }
  return s;
}

Schema Schema::from_file(const std::filesystem::path& path) {
  return from_json_text(read_file(path));
}

RowError::RowError(std::size_t row, const std::string& message)
    : InputError("row " + std::to_string(row) + ": " + message), row_(row) {}

std::vector<MemeRecord> parse_dataset(std::string_view content, Schema::Format format,
                                      const Schema& schema) {
  switch (format) {
    case Schema::Format::csv: return parse_csv_dataset(content, schema);
    case Schema::Format::jsonl: return parse_jsonl_dataset(content, schema);
    case Schema::Format::infer: break;
  }
  throw InputError("parse_dataset: format must be csv or jsonl");
}

std::vector<MemeRecord> load_dataset(const std::filesystem::path& path, const Schema& schema) {
  auto format = schema.format;
  if (format == Schema::Format::infer) {
    const auto ext = path.extension().string();
    format = (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") ? Schema::Format::jsonl
                                                                     : Schema::Format::csv;
  }
  return parse_dataset(read_file(path), format, schema);
}

ClassDistribution class_distribution(const std::vector<MemeRecord>& records, Task task) {
  if (records.empty()) throw InputError("class_distribution: empty input");
  ClassDistribution d;
  d.task = task;
  const auto& names = class_names(task);
  std::vector<std::size_t> counts(names.size(), 0);
  for (const auto& r : records) ++counts[static_cast<std::size_t>(r.labels.index(task))];
  for (std::size_t i = 0; i < names.size(); ++i) d.counts.emplace_back(names[i], counts[i]);
  return d;
}

std::array<std::size_t, 3> summary_counts(const std::vector<MemeRecord>& records, Task task) {
  std::array<std::size_t, 3> c{};
  for (const auto& r : records) ++c[static_cast<std::size_t>(r.summary[static_cast<std::size_t>(task)])];
  return c;
}

std::size_t train_size(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

DatasetSplit split(const std::vector<MemeRecord>& records, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split: ratio must lie in (0, 1)");
  if (records.size() < 2) throw InputError("split: need at least two records");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, "dataset.split");
  rng.shuffle(order.begin(), order.end());

  DatasetSplit s;
  s.seed = seed;
  s.ratio = ratio;
  const std::size_t n_train = train_size(records.size(), ratio);
  s.train.reserve(n_train);
  s.test.reserve(records.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? s.train : s.test).push_back(records[order[i]]);
  }
  return s;
}

}  // namespace memesent::dataset
