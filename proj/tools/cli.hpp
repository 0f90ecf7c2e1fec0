#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace magd::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kRunFailure = 2,
  kVerificationFailure = 3,
};

/// Entry point of the `magd` tool; argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace magd::cli
