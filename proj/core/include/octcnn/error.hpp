#pragma once

#include <stdexcept>
#include <string>

namespace octcnn {

/// Base class for all engine errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor/layer shape mismatches. Messages name both offending shapes.
struct DimensionError : Error {
    using Error::Error;
};

/// Invalid parameters or configuration (bad rates, counts, unknown variants).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed or inconsistent input data (manifests, archives, partitions).
struct DataError : Error {
    using Error::Error;
};

/// Filesystem failures (open/read/write).
struct IoError : Error {
    using Error::Error;
};

} // namespace octcnn
