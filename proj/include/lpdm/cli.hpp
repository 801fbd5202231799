#pragma once

#include <ostream>

namespace lpdm {

/// Exit codes of the command-line driver.
enum ExitCode : int {
  kExitOk = 0,
  /// Internal error or a failed `verify` comparison.
  kExitFailure = 1,
  /// Precondition violation: bad config, negative density, p = q, ...
  kExitPrecondition = 2,
  /// Solver non-convergence (the partial ladder report is still written).
  kExitNonConvergence = 3,
};

/// Entry point of the `lpdm` executable. Diagnostics go to `err`, short
/// progress lines to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lpdm
