#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tskgen {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation; args excludes the program name. Machine-readable
/// output goes to `out`, notices and warnings to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tskgen
