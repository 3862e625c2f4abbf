#pragma once

#include <iosfwd>

namespace memesent::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

/// Parses argv and runs one subcommand. Never throws; the return value is
/// the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace memesent::cli
