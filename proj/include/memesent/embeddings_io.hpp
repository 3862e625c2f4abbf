#pragma once

// Embedding-exchange files: the bridge to externally computed (pretrained)
// embeddings. JSON lines; the first line is a header
//   {"kind": "sequence" | "vector", "d": 768, "count": N}
// followed by N records
//   {"id": "...", "shape": [L, d] | [d], "values": [...row-major float32...]}

#include "memesent/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace memesent::encode {

enum class EmbeddingKind { sequence, vector };

struct EmbeddingTable {
  EmbeddingKind kind = EmbeddingKind::sequence;
  int d = 0;
  /// Vectors are stored as 1 x d matrices.
  std::map<std::string, MatrixX<double>, std::less<>> items;

  /// Throws InputError for an unknown id.
  const MatrixX<double>& at(std::string_view id) const;
  bool contains(std::string_view id) const { return items.contains(id); }
  std::size_t size() const { return items.size(); }
};

EmbeddingTable read_embeddings(std::istream& in);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

/// Values are written at float32 precision.
void write_embeddings(std::ostream& out, const EmbeddingTable& table);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

}  // namespace memesent::encode
