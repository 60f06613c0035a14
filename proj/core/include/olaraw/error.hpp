#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace olaraw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Query text could not be parsed; `position` is the byte offset of the
/// offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class EstimateError : public Error {
 public:
  using Error::Error;
};

}  // namespace olaraw
