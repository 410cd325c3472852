#pragma once

// The `faor` command-line interface. Exit codes: 0 ok, 2 bad input,
// 3 numeric failure.

#include <string>
#include <vector>

namespace faor::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

}  // namespace faor::cli
