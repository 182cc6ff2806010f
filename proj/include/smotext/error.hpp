#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace smotext {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A remote backend failed or misbehaved (unreachable, bad status,
/// wrong dimension, non-finite payload). CLI exit code 3.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Bad input data or a violated data contract. CLI exit code 4.
class DataError : public Error {
 public:
  using Error::Error;
};

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const BackendError*>(&e)) return 3;
  if (dynamic_cast<const DataError*>(&e)) return 4;
  return 1;
}

}  // namespace smotext
