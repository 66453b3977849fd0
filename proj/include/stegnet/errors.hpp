#pragma once

#include <stdexcept>
#include <string>

namespace stegnet {

// Error categories map onto CLI exit codes: config=1, data=2, numeric=3,
// integrity=4. Shape/precondition violations in tensor math throw plain
// std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace stegnet
