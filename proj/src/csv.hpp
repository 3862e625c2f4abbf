#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memesent::detail {

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. CRLF and LF line endings are both accepted. A trailing newline
/// does not produce an empty final row.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

}  // namespace memesent::detail
