#pragma once

#include <string>
#include <vector>

namespace saflab {

// Exit codes: 0 ok, 1 runtime failure (I/O, all runs diverged), 2 bad flags
// or config.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace saflab
