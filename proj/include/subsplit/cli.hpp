#pragma once

#include <iosfwd>

namespace subsplit {

// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

// Entry point of the `subsplit` tool: fit, gen, eval-split, bench.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace subsplit
