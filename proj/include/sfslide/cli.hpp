#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sfslide::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes: 0 success, 1 failed expectations (`examples`), 2 config or usage error, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace sfslide::cli
