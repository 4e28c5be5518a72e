#pragma once

#include <stdexcept>
#include <string>

namespace qsmpc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

// Raised by Cholesky when a pivot is not strictly positive.
struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct SingularMatrix : Error {
    using Error::Error;
};

struct NonFiniteValue : Error {
    using Error::Error;
};

struct ConvergenceError : Error {
    using Error::Error;
};

// An enumeration or search would exceed its configured size limit.
struct GuardExceeded : Error {
    using Error::Error;
};

} // namespace qsmpc
