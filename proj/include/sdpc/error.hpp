#pragma once

#include <stdexcept>
#include <string>

namespace sdpc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array or matrix dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An object was used in the wrong lifecycle state (consumed tape, empty buffer, ...).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values reached a place that requires finite arithmetic.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A numeric hyperparameter is outside its domain (alpha <= 0, gamma >= 1, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Caller-provided data is malformed (NaN action, non-consecutive window, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A serialized artifact could not be decoded.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Command-line or configuration misuse; the message names the offending field.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdpc
