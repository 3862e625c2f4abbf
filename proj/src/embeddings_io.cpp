#include "memesent/embeddings_io.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace memesent::encode {

using nlohmann::json;

const MatrixX<double>& EmbeddingTable::at(std::string_view id) const {
  auto it = items.find(id);
  if (it == items.end()) throw InputError("embeddings: unknown id '" + std::string(id) + "'");
  return it->second;
}

EmbeddingTable read_embeddings(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto fail = [&](const std::string& msg) -> InputError {
    return InputError("embeddings line " + std::to_string(lineno) + ": " + msg);
  };

  if (!next_line()) throw InputError("embeddings: missing header");
  EmbeddingTable table;
  std::size_t count = 0;
  try {
    const json header = json::parse(line);
    const auto kind = header.at("kind").get<std::string>();
    if (kind == "sequence") table.kind = EmbeddingKind::sequence;
    else if (kind == "vector") table.kind = EmbeddingKind::vector;
    else throw fail("kind must be 'sequence' or 'vector'");
    table.d = header.at("d").get<int>();
    count = header.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw fail(std::string("bad header: ") + e.what());
  }
  if (table.d < 1) throw fail("d must be >= 1");

  for (std::size_t r = 0; r < count; ++r) {
    if (!next_line()) throw InputError("embeddings: header declares " + std::to_string(count) + " records, found " + std::to_string(r));
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw fail(std::string("invalid json: ") + e.what());
    }
    std::string id;
    std::vector<int> shape;
    try {
      id = rec.at("id").get<std::string>();
      shape = rec.at("shape").get<std::vector<int>>();
    } catch (const json::exception& e) {
      throw fail(std::string("bad record: ") + e.what());
    }
    Eigen::Index rows = 1, cols = 0;
    if (table.kind == EmbeddingKind::vector) {
      if (shape.size() != 1) throw fail("vector record '" + id + "' must have shape [d]");
      cols = shape[0];
    } else {
      if (shape.size() != 2) throw fail("sequence record '" + id + "' must have shape [L, d]");
      rows = shape[0];
      cols = shape[1];
      if (rows < 1) throw fail("sequence record '" + id + "' has L < 1");
    }
    if (cols != table.d) {
      throw fail("record '" + id + "' has d=" + std::to_string(cols) + " but header declares d=" + std::to_string(table.d));
    }
    const auto& values = rec.at("values");
    if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != rows * cols) {
      throw fail("record '" + id + "' value count does not match its shape");
    }
    MatrixX<double> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const auto& cell = values[static_cast<std::size_t>(i)];
      if (!cell.is_number()) throw fail("record '" + id + "' contains a non-numeric value");
      const double v = static_cast<float>(cell.get<double>());
      if (!std::isfinite(v)) throw fail("record '" + id + "' contains a non-finite value");
      m.data()[i] = v;
    }
    if (!table.items.emplace(id, std::move(m)).second) throw fail("duplicate id '" + id + "'");
  }
  return table;
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embeddings " + path.string());
  return read_embeddings(in);
}

namespace {
// Nine significant digits keep the decimal well inside the float's rounding
// interval, so parsing as double and narrowing recovers the same float.
void write_float(std::ostream& out, float v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  out.write(buf, n);
}
}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
  json header = {{"kind", table.kind == EmbeddingKind::sequence ? "sequence" : "vector"},
                 {"d", table.d},
                 {"count", table.items.size()}};
  out << header.dump() << '\n';
  for (const auto& [id, m] : table.items) {
    if (m.cols() != table.d) throw InputError("write_embeddings: record '" + id + "' width differs from d");
    if (table.kind == EmbeddingKind::vector && m.rows() != 1) {
      throw InputError("write_embeddings: vector record '" + id + "' must have one row");
    }
    out << "{\"id\":" << json(id).dump() << ",\"shape\":[";
    if (table.kind == EmbeddingKind::sequence) out << m.rows() << ',';
    out << m.cols() << "],\"values\":[";
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (i > 0) out << ',';
      write_float(out, static_cast<float>(m.data()[i]));
    }
    out << "]}\n";
  }
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write embeddings " + path.string());
  write_embeddings(out, table);
}

}  // namespace memesent::encode
