#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mipost::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;    ///< unreadable or invalid table / prior
inline constexpr int kExitNumeric = 3;  ///< numeric precondition failed
inline constexpr int kExitUsage = 64;   ///< bad flags

/// Runs the command line front end. `args` excludes the program name. The
/// report goes to `out`, messages and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mipost::cli
