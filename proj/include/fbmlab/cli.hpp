#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fbmlab {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,   // self-test failure or certified bound violated
  kExitInvalid = 2,       // bad flags, config or parameters
  kExitNoContraction = 3,
};

/// Runs the command line `args` (without the program name). Subcommands:
/// fbm, simulate, verify, recurrence, example, sweep. Values resolve as
/// flags > --config JSON file > defaults.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fbmlab
