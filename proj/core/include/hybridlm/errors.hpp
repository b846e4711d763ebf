#pragma once

#include <stdexcept>
#include <string>

namespace hybridlm {

// Error taxonomy shared across the library. The CLI maps these onto
// distinct exit codes, so keep the hierarchy flat and stable.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LengthError : std::runtime_error {
    explicit LengthError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transcript sets handed to diagnostics must cover identical sample ids.
struct AlignmentError : std::runtime_error {
    explicit AlignmentError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hybridlm
