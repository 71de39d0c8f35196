#pragma once

#include <stdexcept>
#include <string>

namespace kcf {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments or data: wrong shapes, non-finite values, bad ranges.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A symmetric positive-definite factorisation failed.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// A computed quantity failed a numerical sanity check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The request is well-formed but outside what the routine supports.
class Unsupported : public Error {
 public:
  using Error::Error;
};

}  // namespace kcf
