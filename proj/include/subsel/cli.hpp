#pragma once

#include <string>
#include <vector>

namespace subsel {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes of the command-line driver.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitInput = 2,   // I/O or parse failure
  kExitConfig = 3,  // invalid configuration
  kExitGuard = 4,   // solver guard (dimension mismatch and friends)
};

/// Runs the `subsel` command line; args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace subsel
