// Command-line front end. Exit codes: 0 ok, 1 a property failed or an
// unexpected error, 2 bad config or arguments, 3 budget exceeded, 4 a
// precondition of the requested computation does not hold.
#pragma once

#include "semidyn/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace semidyn {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitBudget = 3, kExitPrecondition = 4 };

int exit_code_for(ErrorCode code);

/// Accepts a path, or the bare name of a bundled config (e.g. "example1_a2").
std::string resolve_config_path(const std::string& name_or_path);

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semidyn
