#include "memesent/evalmetrics.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace memesent::eval {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
  if (k < 1) throw InputError("confusion matrix needs at least one class");
  counts_.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
}

std::size_t ConfusionMatrix::index(int truth, int predicted) const {
  if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_) {
    throw InputError("confusion matrix index (" + std::to_string(truth) + ", " + std::to_string(predicted) +
                     ") outside " + std::to_string(k_) + " classes");
  }
  return static_cast<std::size_t>(truth) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(predicted);
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int k) {
  if (truth.size() != predicted.size()) {
    throw InputError("confusion: " + std::to_string(truth.size()) + " gold labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k) {
      throw InputError("confusion: label out of range at position " + std::to_string(i));
    }
    ++cm.at(truth[i], predicted[i]);
  }
  return cm;
}

double macro_f1(const ConfusionMatrix& cm) {
  const int k = cm.classes();
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    const auto tp = static_cast<double>(cm.at(c, c));
    double predicted = 0.0, actual = 0.0;
    for (int j = 0; j < k; ++j) {
      predicted += static_cast<double>(cm.at(j, c));
      actual += static_cast<double>(cm.at(c, j));
    }
    const double p = predicted > 0 ? tp / predicted : 0.0;
    const double r = actual > 0 ? tp / actual : 0.0;
    sum += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return sum / k;
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw InputError("accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double to_percent(double fraction) { return std::round(fraction * 10000.0) / 100.0; }

const ReportCell& EvalReport::cell(VariantKind v, Task t) const {
  const auto vi = cells.find(v);
  if (vi == cells.end()) throw InputError("report has no variant " + std::string(variant_heading(v)));
  const auto ti = vi->second.find(t);
  if (ti == vi->second.end()) throw InputError("report has no task " + std::string(task_name(t)));
  return ti->second;
}

double EvalReport::average_accuracy(VariantKind v) const {
  double s = 0.0;
  for (Task t : tasks) s += cell(v, t).accuracy;
  return tasks.empty() ? 0.0 : s / static_cast<double>(tasks.size());
}

double EvalReport::average_macro_f1(VariantKind v) const {
  double s = 0.0;
  for (Task t : tasks) s += cell(v, t).macro_f1;
  return tasks.empty() ? 0.0 : s / static_cast<double>(tasks.size());
}

EvalReport build_report(const std::vector<VariantPredictions>& predictions, const TaskLabelMap& gold) {
  if (predictions.empty()) throw InputError("build_report: no variants");
  if (gold.empty()) throw InputError("build_report: no tasks");
  EvalReport report;
  for (const auto& [task, labels] : gold) report.tasks.push_back(task);
  for (const auto& vp : predictions) {
    if (report.cells.count(vp.variant)) throw InputError("build_report: duplicate variant");
    report.variants.push_back(vp.variant);
    auto& row = report.cells[vp.variant];
    for (const auto& [task, truth] : gold) {
      const auto it = vp.predicted.find(task);
      if (it == vp.predicted.end()) {
        throw InputError("build_report: " + std::string(variant_heading(vp.variant)) + " has no predictions for " +
                         std::string(task_name(task)));
      }
      if (it->second.size() != truth.size()) {
        throw InputError("build_report: " + std::string(variant_heading(vp.variant)) + "/" +
                         std::string(task_name(task)) + " has " + std::to_string(it->second.size()) +
                         " predictions for " + std::to_string(truth.size()) + " gold labels");
      }
      const auto cm = confusion(truth, it->second, task_arity(task));
      row[task] = {to_percent(accuracy(cm)), to_percent(macro_f1(cm))};
    }
  }
  return report;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void table(std::ostringstream& out, const EvalReport& r, const char* title, double ReportCell::*field,
           double (EvalReport::*avg)(VariantKind) const) {
  char line[256];
  std::snprintf(line, sizeof line, "%-20s", title);
  out << line;
  for (auto v : r.variants) {
    std::snprintf(line, sizeof line, "%10s", std::string(variant_heading(v)).c_str());
    out << line;
  }
  out << '\n';
  for (Task t : r.tasks) {
    std::snprintf(line, sizeof line, "%-20s", std::string(task_heading(t)).c_str());
    out << line;
    for (auto v : r.variants) {
      std::snprintf(line, sizeof line, "%10s", fixed(r.cell(v, t).*field, 2).c_str());
      out << line;
    }
    out << '\n';
  }
  std::snprintf(line, sizeof line, "%-20s", "AVERAGE");
  out << line;
  for (auto v : r.variants) {
    std::snprintf(line, sizeof line, "%10s", fixed((r.*avg)(v), 3).c_str());
    out << line;
  }
  out << '\n';
}

// Emits numbers as fixed decimals so the JSON matches the text tables.
nlohmann::ordered_json number(double v, int decimals) { return nlohmann::ordered_json::parse(fixed(v, decimals)); }

}  // namespace

std::string format_report_text(const EvalReport& report) {
  std::ostringstream out;
  table(out, report, "ACCURACY (%)", &ReportCell::accuracy, &EvalReport::average_accuracy);
  out << '\n';
  table(out, report, "MACRO F1 (%)", &ReportCell::macro_f1, &EvalReport::average_macro_f1);
  return out.str();
}

std::string format_report_json(const EvalReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  nlohmann::ordered_json averages = nlohmann::ordered_json::object();
  for (auto v : report.variants) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (Task t : report.tasks) {
      const auto& c = report.cell(v, t);
      row[std::string(task_name(t))] = {{"accuracy", number(c.accuracy, 2)}, {"macro_f1", number(c.macro_f1, 2)}};
    }
    j[std::string(variant_heading(v))] = row;
    averages[std::string(variant_heading(v))] = {{"accuracy", number(report.average_accuracy(v), 3)},
                                                 {"macro_f1", number(report.average_macro_f1(v), 3)}};
  }
  j["averages"] = averages;
  return j.dump(2) + "\n";
}

}  // namespace memesent::eval
