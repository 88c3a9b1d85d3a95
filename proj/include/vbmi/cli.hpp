#pragma once

#include <iosfwd>

namespace vbmi::cli {

enum ExitCode : int { kOk = 0, kError = 1, kNotConverged = 2, kPartialFailure = 3 };

// Entry point shared by the executable and the tests.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace vbmi::cli
