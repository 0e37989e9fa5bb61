#pragma once

#include <iosfwd>

namespace gridcoord::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kVerificationFailed = 2,
  kInfeasible = 3,
  kSolverFailure = 4,
};

/// Entry point of the `gridcoord` tool. Parses argv, runs one subcommand and
/// returns its exit code. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridcoord::cli
