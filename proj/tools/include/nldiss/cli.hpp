#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nldiss::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 1,
    numerical_error = 2,
    unconverged = 3,
};

/// Entry point of the nldiss tool. `args` excludes the program name.
/// Regular output goes to `out`, progress and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nldiss::cli
