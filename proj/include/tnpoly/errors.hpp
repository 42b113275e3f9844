#pragma once

#include <stdexcept>
#include <string>

namespace tnpoly {

/// Bad input: wrong shape, representation, out-of-range index, malformed file.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Arithmetic went wrong: divergence, non-finite values, overflow, size caps.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A dense object would exceed the configured size cap.
class CapExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace tnpoly
