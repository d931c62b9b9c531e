#pragma once

#include <stdexcept>
#include <string>

namespace obsdesign {

// Raised for malformed or contract-violating inputs. CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when an iterative routine fails to converge or a computation
// degenerates. CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace obsdesign
