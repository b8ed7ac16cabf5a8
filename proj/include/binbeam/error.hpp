#pragma once

#include <stdexcept>
#include <string>

namespace binbeam {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data, I/O failure, or numerical breakdown (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace binbeam
