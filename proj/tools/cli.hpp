#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace valunlearn::cli {

/// Runs one command line. `args` excludes the program name.
/// Returns 0 on success, 2 on usage or config errors, 1 on other failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace valunlearn::cli
