#pragma once

namespace gsc {

/// Command-line entry point behind main(). Subcommands: train, encode,
/// decode, eval, analyze, complexity. Returns the process exit code:
/// 0 success, 2 configuration/usage error, 3 data error, 4 format error.
int run_cli(int argc, const char* const* argv);

}  // namespace gsc
