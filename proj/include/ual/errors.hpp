#pragma once

#include <stdexcept>
#include <string>

namespace ual {

// Exception hierarchy. The CLI maps these onto exit codes:
// ConfigError -> 2, NumericError -> 4, everything else -> 3.
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

class FormatError : public DataError {
public:
  using DataError::DataError;
};

class DimensionError : public DataError {
public:
  using DataError::DataError;
};

class DomainError : public DataError {
public:
  using DataError::DataError;
};

class RegionError : public DataError {
public:
  using DataError::DataError;
};

class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace ual
