#pragma once

#include <stdexcept>
#include <string>

namespace rhftf {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Evaluation requested at a nucleus (or another point where the
/// quantity is infinite).
class SingularPointError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Two fields live on different grids.
class GridMismatchError : public DomainError {
public:
  using DomainError::DomainError;
};

/// An iterative method ran out of budget or lost its bracket.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

} // namespace rhftf
