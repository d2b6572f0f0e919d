#pragma once

#include <stdexcept>
#include <string>

namespace vrf {

// Base of all recoverable errors raised by the library. Logic errors
// (broken internal invariants, bad indices) use std::logic_error instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk input. Messages carry a byte offset or record index.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration: bad keys, mismatched layer dims, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A value rejected by a type's constructor or an operation's precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace vrf
