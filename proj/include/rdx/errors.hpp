#pragma once

#include <stdexcept>
#include <string>

namespace rdx {

// Bad caller input: dimension mismatches, out-of-range values, unknown ids.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid configuration (groupings, experiment config files).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_ = 0;
};

// Non-finite loss or other numerical breakdown during optimization.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Procedural generation gave up (e.g. building placement).
class GenerationError : public std::runtime_error {
public:
    explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rdx
