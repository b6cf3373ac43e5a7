#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rsica::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `rsica` tool; `args` excludes the program name.
// Subcommands: analyze, generate, evaluate, kernel-check, convert-captions.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rsica::cli
