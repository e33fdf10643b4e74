#pragma once

#include <stdexcept>
#include <string>

namespace elastovb {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range input (bad dimensions, non-finite values, bad indices).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A linear system that should be nonsingular was not (e.g. missing Dirichlet constraints).
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Anything else numerical that went wrong mid-run.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

}  // namespace elastovb
