#pragma once

#include <iosfwd>

#include "stein/experiments.hpp"

namespace stein {

// Exit codes: 0 pass, 2 invariant failure, 1 usage or parse error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInvariant = 2;

// Entry point of the stein-cli tool, with the streams injectable for tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stein
