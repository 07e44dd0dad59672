#pragma once

#include <iosfwd>

namespace gpmkl::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalFailure = 3 };

/// Runs one subcommand: generate, train, cv, predict, relevance.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gpmkl::cli
