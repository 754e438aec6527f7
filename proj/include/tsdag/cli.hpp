#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tsdag {

inline constexpr const char* tool_version = "0.1.0";

/// Exit codes of the command-line tool.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_numerical = 3;

/// Runs the command line `args` (without the program name); returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tsdag
