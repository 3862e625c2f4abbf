#pragma once

// First-axis fusion: image and text representations are stacked row-wise
// into one sequence, image rows first. Widths must agree; a mismatch is
// resolved only through an explicit projection.

#include "memesent/nn.hpp"
#include "memesent/random.hpp"
#include "memesent/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace memesent::fusion {

enum class RowSource : std::uint8_t { image, text, caption };

constexpr std::string_view row_source_name(RowSource s) {
  switch (s) {
    case RowSource::image: return "image";
    case RowSource::text: return "text";
    case RowSource::caption: return "caption";
  }
  return "";
}

template <typename Scalar>
struct FusedRepresentation {
  MatrixX<Scalar> values;
  std::vector<RowSource> provenance;  // one tag per row

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index width() const { return values.cols(); }
};

template <typename Scalar>
FusedRepresentation<Scalar> tagged(MatrixX<Scalar> values, RowSource source) {
  FusedRepresentation<Scalar> f;
  f.provenance.assign(static_cast<std::size_t>(values.rows()), source);
  f.values = std::move(values);
  return f;
}

/// Rows of `a` followed by rows of `b`, copied bit for bit.
template <typename Scalar>
FusedRepresentation<Scalar> fuse_first_axis(const FusedRepresentation<Scalar>& a, const FusedRepresentation<Scalar>& b) {
  if (a.width() != b.width()) {
    throw InputError("fuse_first_axis: width " + std::to_string(a.width()) + " != " + std::to_string(b.width()) +
                     " (project one side first)");
  }
  FusedRepresentation<Scalar> out;
  out.values.resize(a.rows() + b.rows(), a.width());
  out.values.topRows(a.rows()) = a.values;
  out.values.bottomRows(b.rows()) = b.values;
  out.provenance = a.provenance;
  out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
  return out;
}

template <typename Scalar>
struct ProjectionParams {
  MatrixX<Scalar> w;  // d_in x d_out
  MatrixX<Scalar> b;  // 1 x d_out

  static ProjectionParams identity(int d) {
    return {MatrixX<Scalar>::Identity(d, d), MatrixX<Scalar>::Zero(1, d)};
  }

  static ProjectionParams random(int d_in, int d_out, Rng& rng) {
    ProjectionParams p{MatrixX<Scalar>(d_in, d_out), MatrixX<Scalar>::Zero(1, d_out)};
    nn::fill_normal(p.w, rng, 1.0 / std::sqrt(static_cast<double>(d_in)));
    return p;
  }

  int in_width() const { return static_cast<int>(w.rows()); }
  int out_width() const { return static_cast<int>(w.cols()); }
};

/// Per-row linear map to the projection's output width.
template <typename Scalar>
MatrixX<Scalar> project(const MatrixX<Scalar>& x, const ProjectionParams<Scalar>& params) {
  if (x.cols() != params.in_width()) {
    throw InputError("project: input width " + std::to_string(x.cols()) + " != projection input width " +
                     std::to_string(params.in_width()));
  }
  return nn::linear(x, params.w, params.b);
}

/// Representations available for one meme. Sentence-level embeddings are
/// 1 x d matrices.
template <typename Scalar>
struct VariantInputs {
  std::optional<MatrixX<Scalar>> image;     // patch sequence
  std::optional<MatrixX<Scalar>> tokens;    // token sequence
  std::optional<MatrixX<Scalar>> sentence;  // text sentence embedding
  std::optional<MatrixX<Scalar>> caption;   // caption sentence embedding
};

/// Target width and the projections used to reach it. Without an explicit
/// target the wider side's width is used.
template <typename Scalar>
struct WidthAlignment {
  std::optional<int> target_width;
  std::optional<ProjectionParams<Scalar>> image, text, caption;
};

/// Width each side has before alignment: {first, second}.
struct SideWidths {
  int first = 0;
  int second = 0;
};

/// Seeded projections for whichever side of `kind` does not already have the
/// target width.
template <typename Scalar>
WidthAlignment<Scalar> make_alignment(VariantKind kind, SideWidths widths, std::optional<int> target, std::uint64_t seed) {
  WidthAlignment<Scalar> a;
  a.target_width = target.value_or(std::max(widths.first, widths.second));
  Rng rng(seed, "fusion.projection");
  const int t = *a.target_width;
  if (kind == VariantKind::capsen) {
    if (widths.first != t) a.caption = ProjectionParams<Scalar>::random(widths.first, t, rng);
  } else {
    if (widths.first != t) a.image = ProjectionParams<Scalar>::random(widths.first, t, rng);
  }
  if (widths.second != t) a.text = ProjectionParams<Scalar>::random(widths.second, t, rng);
  return a;
}

namespace detail {
template <typename Scalar>
MatrixX<Scalar> align(const MatrixX<Scalar>& x, int target, const std::optional<ProjectionParams<Scalar>>& proj,
                      const char* what) {
  if (x.cols() == target && !proj) return x;
  if (!proj) {
    throw InputError(std::string("assemble_variant_input: ") + what + " width " + std::to_string(x.cols()) +
                     " differs from target " + std::to_string(target) + " and no projection is configured");
  }
  if (proj->out_width() != target) throw InputError(std::string("assemble_variant_input: ") + what + " projection has the wrong output width");
  return project(x, *proj);
}

template <typename Scalar>
const MatrixX<Scalar>& require(const std::optional<MatrixX<Scalar>>& x, const char* what, VariantKind kind) {
  if (!x) {
    throw InputError(std::string("assemble_variant_input: ") + std::string(variant_heading(kind)) + " requires the " + what);
  }
  if (x->rows() < 1) throw InputError(std::string("assemble_variant_input: empty ") + what);
  return *x;
}
}  // namespace detail

/// IMGTXT: image patches (+) token sequence.
/// IMGSEN: image patches (+) text sentence embedding as one row.
/// CAPSEN: caption sentence embedding (+) text sentence embedding.
template <typename Scalar>
FusedRepresentation<Scalar> assemble_variant_input(VariantKind kind, const VariantInputs<Scalar>& in,
                                                   const WidthAlignment<Scalar>& alignment = {}) {
  const MatrixX<Scalar>* first = nullptr;
  const MatrixX<Scalar>* second = nullptr;
  RowSource first_tag = RowSource::image;
  switch (kind) {
    case VariantKind::imgtxt:
      first = &detail::require(in.image, "image patch sequence", kind);
      second = &detail::require(in.tokens, "text token sequence", kind);
      break;
    case VariantKind::imgsen:
      first = &detail::require(in.image, "image patch sequence", kind);
      second = &detail::require(in.sentence, "text sentence embedding", kind);
      break;
    case VariantKind::capsen:
      first = &detail::require(in.caption, "caption sentence embedding", kind);
      second = &detail::require(in.sentence, "text sentence embedding", kind);
      first_tag = RowSource::caption;
      break;
  }
  if (kind != VariantKind::imgtxt && second->rows() != 1) {
    throw InputError("assemble_variant_input: sentence embedding must be a single row");
  }
  if (kind == VariantKind::capsen && first->rows() != 1) {
    throw InputError("assemble_variant_input: caption embedding must be a single row");
  }
  const int target = alignment.target_width.value_or(static_cast<int>(std::max(first->cols(), second->cols())));
  const auto& first_proj = kind == VariantKind::capsen ? alignment.caption : alignment.image;
  auto a = tagged(detail::align(*first, target, first_proj, kind == VariantKind::capsen ? "caption" : "image"), first_tag);
  auto b = tagged(detail::align(*second, target, alignment.text, "text"), RowSource::text);
  return fuse_first_axis(a, b);
}

/// True when the provenance pattern is the one `kind` produces.
template <typename Scalar>
bool matches_variant(VariantKind kind, const FusedRepresentation<Scalar>& f) {
  const auto& p = f.provenance;
  if (static_cast<Eigen::Index>(p.size()) != f.rows() || p.size() < 2) return false;
  switch (kind) {
    case VariantKind::capsen:
      return p.size() == 2 && p[0] == RowSource::caption && p[1] == RowSource::text;
    case VariantKind::imgsen:
      if (p.back() != RowSource::text) return false;
      for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        if (p[i] != RowSource::image) return false;
      }
      return true;
    case VariantKind::imgtxt: {
      std::size_t i = 0;
      while (i < p.size() && p[i] == RowSource::image) ++i;
      if (i == 0 || i == p.size()) return false;
      for (; i < p.size(); ++i) {
        if (p[i] != RowSource::text) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace memesent::fusion
