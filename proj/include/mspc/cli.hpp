#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mspc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kDivergence = 4,
  kIncompatible = 5,
};

// Runs one command line (without the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mspc::cli
