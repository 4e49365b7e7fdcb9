#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ser::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

// Runs one command line (args excludes the program name). Results go to
// `out` as JSON; failures are reported to `err` as a JSON error record.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ser::cli
