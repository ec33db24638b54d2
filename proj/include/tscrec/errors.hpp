#pragma once

#include <stdexcept>

namespace tscrec {

// Malformed files, violated data invariants, incompatible checkpoints.
// The CLI maps these to exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid option combinations (e.g. an image variant trained without a
// feature table). The CLI maps these to exit code 1, like a usage error.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint written by a different serialization format version.
struct VersionError : DataError {
    using DataError::DataError;
};

}  // namespace tscrec
