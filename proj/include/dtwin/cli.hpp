#pragma once
#include <string>
#include <vector>

namespace dtwin {

// Entry point shared by the dtwin binary and the tests. args excludes the
// program name (argv[1..]). Returns the process exit code; errors print to
// stderr and no artifacts are written for a failed command.
int run_cli(const std::vector<std::string>& args);

}  // namespace dtwin
