// errors.hpp: Exception types shared by every qlag module.
//
// The CLI maps each category onto a process exit code:
//   ValidationError -> 2, NumericalGuard -> 3, IoError -> 4.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qlag {

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Time outside the span covered by a FieldSchedule.
class CoverageError : public ValidationError {
public:
    explicit CoverageError(const std::string& what) : ValidationError(what) {}
};

// Singular weights, degenerate eigenbases, broken stiffness gates.
class NumericalGuard : public std::runtime_error {
public:
    explicit NumericalGuard(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Carries every violation found while validating a config, not just the first.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : ValidationError(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid config:";
        for (const auto& s : v) out += "\n  - " + s;
        return out;
    }
    std::vector<std::string> violations_;
};

} // namespace qlag
