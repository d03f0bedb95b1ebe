#pragma once

#include <iosfwd>

namespace robq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

// Entry point of the `robq` tool. Human output goes to `out`, diagnostics
// to `err`; machine-readable results are written to the files named by flags.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace robq
