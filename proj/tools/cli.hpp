#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace spectraprune::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNumericFailure = 3,
};

// Maximum deviation accepted by conv-check.
inline constexpr double kConvCheckTolerance = 1e-10;

/// Runs one invocation. args excludes the program name. Reports go to `out`
/// unless redirected to a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spectraprune::cli
