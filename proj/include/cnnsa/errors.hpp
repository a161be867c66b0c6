#pragma once

#include <stdexcept>
#include <string>

namespace cnnsa {

/// Bad configuration or invalid user input caught before any work starts.
/// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed external data (vector files, datasets, checkpoints).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure mid-run (non-finite loss or gradient).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cnnsa
