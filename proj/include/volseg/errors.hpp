#pragma once

#include <stdexcept>
#include <string>

namespace volseg {

// Root of the toolkit's error hierarchy. Everything thrown on a contract
// violation or an unusable input derives from this.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or unwritable path.
class IoError : public Error {
    using Error::Error;
};

// Structurally invalid NIfTI content (bad magic, bad dims, ...).
class FormatError : public Error {
    using Error::Error;
};

// On-disk scalar type we do not handle; message names the code.
class UnsupportedTypeError : public FormatError {
    using FormatError::FormatError;
};

// Data section shorter than the header promises.
class TruncationError : public FormatError {
    using FormatError::FormatError;
};

// Requested datatype cannot represent the data and lossy writes were not
// explicitly allowed.
class PrecisionError : public Error {
    using Error::Error;
};

// Singular affine, or operands living on different grids.
class GeometryError : public Error {
    using Error::Error;
};

// Operation requires at least one foreground voxel.
class EmptyMaskError : public Error {
    using Error::Error;
};

// Otsu over a constant region.
class DegenerateHistogramError : public Error {
    using Error::Error;
};

// t-test whose variance estimate collapses to zero.
class DegenerateVarianceError : public Error {
    using Error::Error;
};

// Bad user-supplied parameter or file content (CLI, config, CSV, spec).
class InputError : public Error {
    using Error::Error;
};

} // namespace volseg
