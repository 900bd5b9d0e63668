#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rtr::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// args[0] is the program name. Diagnostics go to `err`, summaries to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Applies RTR_NUM_THREADS (positive integer) to the OpenMP runtime. Returns false on a bad value.
bool apply_thread_env(std::ostream& err);

}  // namespace rtr::cli
