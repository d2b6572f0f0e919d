#pragma once

#include <string>
#include <vector>

namespace vrf::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,        // bad flags or config
  kInputFormat = 2,  // missing or malformed input file
  kInternal = 3,     // broken invariant
};

// Runs `vrfuse <args...>`; args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace vrf::cli
