#pragma once

#include <stdexcept>
#include <string>

namespace voxelnet {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size mismatch between tensors/filters/vectors.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid argument value (out-of-range index, bad hyperparameter, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Malformed or truncated file content.
struct FormatError : Error {
    using Error::Error;
};

// Training produced a non-finite cost.
struct DivergedError : Error {
    using Error::Error;
};

}  // namespace voxelnet
