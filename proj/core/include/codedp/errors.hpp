#pragma once

#include <stdexcept>
#include <string>

namespace codedp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, configs, or data that fails a precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Operation applied to an object in the wrong state, e.g. coding a stack twice.
class StateError : public Error {
 public:
  using Error::Error;
};

// File-system or serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Degenerate numerical input (all-zero kernels, non-finite intermediates).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace codedp
