#pragma once

#include <iosfwd>

namespace tmsv::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kInternalError = 1,
    kInputError = 2,
    kEmptyResult = 3,
    kFitFailure = 4,
};

/// Parses argv and runs one subcommand. Diagnostics go to `err`, summaries
/// to `out`.
int run_cli(int argc, char const* const* argv, std::ostream& out, std::ostream& err);

} // namespace tmsv::cli
