#pragma once

#include <stdexcept>
#include <string>

namespace rsica {

// Base class for every failure reported by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be read, decoded or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Inputs violate a documented precondition (shapes, ranges, dictionaries).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Structured input (JSON/JSONL) does not follow the expected schema.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0);

  // 1-based line number of the offending record, 0 when not line oriented.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rsica
