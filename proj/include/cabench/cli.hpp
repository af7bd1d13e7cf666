#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cabench {

// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace cabench
