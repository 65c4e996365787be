#pragma once

#include <string>
#include <vector>

namespace sgdrf::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kRuntimeError = 2;
inline constexpr int kIoError = 3;

// Parses and runs one command line; never throws.
int run(const std::vector<std::string>& args);

}  // namespace sgdrf::cli
