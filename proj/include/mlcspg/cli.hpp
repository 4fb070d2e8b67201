#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlcspg {

/// Exit codes of the command-line runner.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitRuntime = 3 };

/// Runs the command line `args` (args[0] is the program name). Results go to
/// `out`, key=value logs and diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlcspg
