#include "memesent/types.hpp"

#include <algorithm>
#include <cctype>

namespace memesent {

namespace {
std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}
}  // namespace

Task parse_task(std::string_view name) {
  const auto n = lower(name);
  if (n == "humor" || n == "humour") return Task::humor;
  if (n == "sarcasm") return Task::sarcasm;
  if (n == "motivation" || n == "motivational") return Task::motivation;
  if (n == "sentiment" || n == "overall_sentiment") return Task::sentiment;
  throw InputError("unknown task '" + std::string(name) + "'");
}

std::string_view variant_name(VariantKind v) {
  switch (v) {
    case VariantKind::imgtxt: return "imgtxt";
    case VariantKind::imgsen: return "imgsen";
    case VariantKind::capsen: return "capsen";
  }
  return "";
}

std::string_view variant_heading(VariantKind v) {
  switch (v) {
    case VariantKind::imgtxt: return "IMGTXT";
    case VariantKind::imgsen: return "IMGSEN";
    case VariantKind::capsen: return "CAPSEN";
  }
  return "";
}

VariantKind parse_variant(std::string_view name) {
  const auto n = lower(name);
  if (n == "imgtxt") return VariantKind::imgtxt;
  if (n == "imgsen") return VariantKind::imgsen;
  if (n == "capsen") return VariantKind::capsen;
  throw InputError("unknown variant '" + std::string(name) + "' (expected imgtxt, imgsen or capsen)");
}

}  // namespace memesent
