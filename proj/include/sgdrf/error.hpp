#pragma once

#include <stdexcept>
#include <string>

namespace sgdrf {

// Error hierarchy. The CLI maps each kind to its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input, configuration, or dimensions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Ill-conditioned matrices and other numerical failures.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Unreadable, unwritable, or corrupt files.
class IoError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void fail_validation(const std::string& what);

inline void require(bool condition, const std::string& what) {
  if (!condition) fail_validation(what);
}

}  // namespace sgdrf
