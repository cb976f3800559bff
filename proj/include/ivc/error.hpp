#pragma once

#include <stdexcept>
#include <string>

namespace ivc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed spec or argument (non-normalized pmf, negative rate, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for this kind of source or example.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Alphabet, model or channel exceeds a hard size limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Example or batch kind incompatible with the requested variant.
class TypeError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values in a numeric pipeline (divergent training, NaN input).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivc
