#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tidyfit/error.hpp"

namespace tidyfit {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitFit = 3,
  kExitGolden = 4,
};

int exit_code_for(const Error& error);

/// Runs the tidyfit command line. `args` excludes the program name.
/// Tables go to `out`, diagnostics to `err`; the return value is the exit code.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace tidyfit
