#pragma once

namespace hoa {

/// Runs the `hoa` command line. Returns the process exit code:
/// 0 success, 1 I/O error, 2 validation error, 3 rule failure, 4 round-trip below threshold.
int run_cli(int argc, char** argv);

} // namespace hoa
