#pragma once

#include <stdexcept>
#include <string>

namespace shiftres {

/// A computation produced non-finite or out-of-bounds values.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration; carries the 1-based line number when known (0 otherwise).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace shiftres
