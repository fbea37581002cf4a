#pragma once

#include <ostream>

namespace microvol {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitUsage = 2,
    kExitData = 3,
    kExitCapacity = 4,
};

/// The `microvol` command line. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace microvol
