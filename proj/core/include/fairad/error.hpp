#pragma once

#include <stdexcept>
#include <string>

namespace fairad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A computation produced or received a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or precondition violated by caller-supplied values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Messages carry line / column context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Data does not satisfy what an operation needs (empty group, infeasible split, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairad
