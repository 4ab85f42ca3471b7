#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nmzi::cli {

/// Environment variable naming the directory relative --out paths resolve against.
inline constexpr const char* kOutputDirEnv = "NMZI_OUTPUT_DIR";

/// Run the command line (without the program name). Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nmzi::cli
