#pragma once

#include <stdexcept>
#include <string>

namespace symopt {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite or otherwise malformed numeric input.
struct InvalidInput : Error {
    using Error::Error;
};

// Symmetric matrix with an eigenvalue significantly below zero.
struct NotPSD : Error {
    using Error::Error;
};

// An operation that needs a direction was handed the zero matrix.
struct ZeroDirection : Error {
    using Error::Error;
};

// Inconsistent or out-of-range configuration.
struct InvalidConfig : Error {
    using Error::Error;
};

// Exact inverse square root requested for a singular Gram matrix with no damping.
struct SingularGram : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// Sign-pattern operations require every entry to be nonzero.
struct ZeroEntry : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace symopt
