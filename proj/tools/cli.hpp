#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pencrit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation; `args` excludes the program name. Artifacts go to the paths named
/// by --out (stdout when absent); diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pencrit::cli
