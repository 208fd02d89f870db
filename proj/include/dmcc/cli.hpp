#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dmcc::cli {

inline constexpr std::string_view kVersion = "1.0.0";

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,       // malformed or invalid config document
  kAllDiverged = 3,       // every run of every algorithm diverged
  kIoError = 4,           // unwritable output or unreadable data file
  kMissingConfig = 5,     // --config path does not exist
  kUnknownParameter = 6,  // sweep grid names an unknown parameter
};

/// Parses `args` (without the program name) and runs one subcommand.
/// Diagnostics go to `err`, summaries to `out`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace dmcc::cli
