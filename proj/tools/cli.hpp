#pragma once

#include <iosfwd>

namespace multistop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the multistop tool. Output files go to --out when given,
/// otherwise to `out`; diagnostics go to `err`.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace multistop::cli
