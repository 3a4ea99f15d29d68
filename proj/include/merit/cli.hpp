#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace merit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitParse = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNonConvergence = 4;

/// Worker count from MERIT_THREADS (unset or 0 = serial).
unsigned threads_from_env();

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace merit::cli
