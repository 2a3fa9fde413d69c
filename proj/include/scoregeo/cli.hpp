#pragma once

#include <string>
#include <vector>

namespace scoregeo {

// Entry point behind the scoregeo binary. Exit codes: 0 success,
// 2 config error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args); // args without argv[0]

} // namespace scoregeo
