#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chordseg {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data (labels, records, files). CLI exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during optimisation. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

class MalformedLabel : public DataError {
 public:
  explicit MalformedLabel(const std::string& label, const std::string& why = {})
      : DataError("malformed chord label '" + label + "'" + (why.empty() ? "" : ": " + why)) {}
};

class UnknownShorthand : public DataError {
 public:
  UnknownShorthand(const std::string& label, const std::string& shorthand)
      : DataError("unknown shorthand '" + shorthand + "' in chord label '" + label + "'") {}
};

class NoChordInput : public DataError {
 public:
  NoChordInput() : DataError("no-chord has no root or quality") {}
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class MalformedRecord : public DataError {
 public:
  MalformedRecord(std::size_t line, const std::string& why)
      : DataError("line " + std::to_string(line) + ": " + why), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatVersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class LengthMismatch : public DataError {
 public:
  using DataError::DataError;
};

class InvalidTemplate : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace chordseg
