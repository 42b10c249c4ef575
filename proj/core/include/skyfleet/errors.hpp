#pragma once

#include <stdexcept>
#include <string>

namespace skyfleet {

// Bad camera/scenario/grid configuration. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File or wire-format failure. CLI maps this to exit code 2.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace skyfleet
