#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mcqf::cli {

/// Exit codes: 0 success, 1 invalid config or failed stage, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses `args` (without the program name) and runs the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcqf::cli
