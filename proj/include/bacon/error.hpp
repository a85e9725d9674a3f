#pragma once

#include <stdexcept>
#include <string>

namespace bacon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the range its domain type allows.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector or matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input or intermediate value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Operation not allowed in the object's current state (e.g. a frozen permutation).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input: CSV rows, Boolean expressions, JSON documents.
class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bacon
