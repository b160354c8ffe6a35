// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace bdpo {

// Error families map 1:1 onto CLI exit codes (config 2, data 3, numeric 4).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset loader failure modes, kept distinct so callers can tell them apart.
struct CorruptHeaderError : DataError {
    explicit CorruptHeaderError(const std::string& msg) : DataError(msg) {}
};

struct DimMismatchError : DataError {
    explicit DimMismatchError(const std::string& msg) : DataError(msg) {}
};

struct TruncationError : DataError {
    explicit TruncationError(const std::string& msg) : DataError(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bdpo
