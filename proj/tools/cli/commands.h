#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gtad::cli {

// Exit statuses shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kValidationError = 4,
};

// Runs the command line `args` (args[0] is the program name). Normal output
// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gtad::cli
