#pragma once

#include <stdexcept>
#include <string>

namespace gtad {

// Base for every error the library raises. The CLI maps the subclasses onto
// process exit codes (config 2, io 3, validation 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand extents disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input violates a data contract (e.g. anomalous sample in a training batch,
// single-class metric input, non-finite objective).
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace gtad
