#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blockchol::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotPd = 3;
inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand (fit | simulate | predict | edges). `args` excludes
/// the program name. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blockchol::cli
