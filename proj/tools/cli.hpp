#pragma once

#include <string>
#include <vector>

namespace netanom::cli {

// Full command-line entry point; args excludes the program name.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
int run_cli(const std::vector<std::string>& args);

}  // namespace netanom::cli
