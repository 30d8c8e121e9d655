#ifndef PASSAUTH_ERRORS_HPP
#define PASSAUTH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace passauth {

// Usage / configuration mistakes (bad flags, unknown config keys). Exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data: malformed files, non-finite samples, shape mismatches,
// ordering violations. Exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : DataError {
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

struct MalformedInputError : DataError {
    explicit MalformedInputError(const std::string& msg) : DataError(msg) {}
};

struct ParseError : DataError {
    explicit ParseError(const std::string& msg) : DataError(msg) {}
};

// Numerical failure (NaN loss, poisoned optimizer state). Exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace passauth

#endif
