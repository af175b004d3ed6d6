#pragma once

#include <iosfwd>

namespace pll::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;     // bad flags, config, paths, or file contents
inline constexpr int kExitNumerical = 3;  // NumericalError during a stage

// Entry point behind the `pll` binary. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pll::cli
