#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tauh2/error.hpp"

namespace tauh2 {

/// Exit-code contract of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitInfinite = 1,   // infinite strong H2-norm, or an infeasible request
    kExitInput = 2,      // unreadable or invalid input
    kExitNumerical = 3,  // numerical failure
};

int exit_code_for(ErrorKind kind);

/// Runs one invocation; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tauh2
