#pragma once

namespace flowsample {

/// Entry point for the `flowsample` command: subcommands solve, simulate,
/// analyze and reproduce. Returns the process exit status; errors print one
/// diagnostic line to stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace flowsample
