#pragma once

#include <stdexcept>
#include <string>

namespace uap {

// Error taxonomy mapped to CLI exit codes: ConfigError -> 2,
// DataError/FormatError -> 3, NumericError -> 4.

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File-format violations carry the byte offset where parsing failed.
struct FormatError : std::runtime_error {
    FormatError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

}  // namespace uap
