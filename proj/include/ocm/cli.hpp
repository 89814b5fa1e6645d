#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocm::cli {

/// Runs one command. `args` excludes the program name. Returns the process
/// exit code: 0 success, 1 usage, 2 validation or I/O, 3 numeric.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv);

}  // namespace ocm::cli
