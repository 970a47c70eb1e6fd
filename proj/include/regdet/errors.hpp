#pragma once

#include <stdexcept>
#include <string>

namespace regdet {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

// Least-squares design matrix is numerically rank deficient.
class FitDegenerateError : public Error {
 public:
  using Error::Error;
};

// Declared tail basis does not describe the sampled tail.
class TailModelError : public Error {
 public:
  using Error::Error;
};

// Quadrature or another numerical procedure missed its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace regdet
