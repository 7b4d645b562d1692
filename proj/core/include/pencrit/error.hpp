#pragma once

#include <stdexcept>
#include <string>

namespace pencrit {

/// Bad arguments or violated preconditions (user-correctable input).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration, CSV or JSON input. Messages carry line/field context.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a usable result.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pencrit
