#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vtmm::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kValidation = 2,
  kIo = 3,
  kContract = 4,
  kNotFound = 5,
  kConflict = 6,
  kGradCheckFailed = 7,
};

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vtmm::cli
