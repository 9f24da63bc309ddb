#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace linqrl::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitGeneration = 2,
  kExitMonitor = 3,
};

// Entry point shared by the executable and the tests. args excludes the
// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace linqrl::cli
