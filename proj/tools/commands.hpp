#pragma once

// The `tesspec` command-line front end. run_cli is the whole program; main()
// only forwards to it so tests can drive commands in-process.

#include <iosfwd>

namespace tesspec::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigOrInput = 2,
  kFormat = 3,
  kFitOrCalibration = 4,
  kRange = 5,
};

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tesspec::cli
