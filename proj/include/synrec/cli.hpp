#pragma once

namespace synrec {

// Full command-line surface; returns the process exit code.
// 0 = success, 2 = configuration/validation error, 3 = runtime failure.
int run_cli(int argc, const char* const* argv);

}  // namespace synrec
