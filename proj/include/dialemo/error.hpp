#pragma once

#include <stdexcept>
#include <string>

namespace dialemo {

// Invalid input data: unreadable files, malformed lines, broken invariants,
// misaligned prediction sets. The CLI maps these to exit code 1.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Model output that does not match the expected response grammar.
struct ParseError : DataError {
    explicit ParseError(const std::string& msg) : DataError(msg) {}
};

} // namespace dialemo
