#pragma once

#include <string>
#include <vector>

namespace imti {

// Full command-line interface; args excludes the program name. Returns the
// process exit code: 0 success, 1 bad input or failed check, 2 runtime
// failure.
int run_command(const std::vector<std::string>& args);

}  // namespace imti
