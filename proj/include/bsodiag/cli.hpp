#pragma once

namespace bsodiag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `bsodiag` tool: simulate, mine, diagnose, evaluate.
int run_cli(int argc, const char* const* argv);

}  // namespace bsodiag
