// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace logitbayes {

/// Process exit codes of the command-line tool.
enum ExitCode : int
{
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitInput = 3,  ///< unreadable or malformed input file
  kExitFit = 4,    ///< fitting or parameter error
  kExitFormat = 5, ///< model or parameter file rejected
};

/// Runs the `lbayes` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace logitbayes
