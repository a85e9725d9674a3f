#pragma once

#include <ostream>

namespace bacon {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNoConvergence = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitConfig = 3;

/// Entry point of the `bacon` command line tool. Reports go to `out`,
/// diagnostics and progress to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bacon
