#pragma once

#include <iosfwd>

namespace shiftres::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    ok = 0,
    usage = 1,
    config_error = 2,
    numerical_failure = 3,
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace shiftres::cli
