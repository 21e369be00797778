#pragma once

#include <stdexcept>
#include <string>

namespace nnop {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite input to an activation or kernel.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration text or field.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Numerical guard tripped: underflowed denominators, degenerate measures,
/// resource budgets.
class NumericGuardError : public Error {
public:
  using Error::Error;
};

/// Density took a negative value at a quadrature node.
class MeasureIntegrityError : public NumericGuardError {
public:
  using NumericGuardError::NumericGuardError;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace nnop
