#pragma once

#include <stdexcept>
#include <string>

namespace uoptime {

// Base of every error raised by the library. The CLI maps I/O errors to exit
// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input text (CSV row, JSON document, configuration string).
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "parse"; }

private:
  std::size_t line_;
};

// Grid gaps and duplicate data points.
class IntegrityError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "integrity"; }
};

class ValidationError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

class LookupError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "lookup"; }
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_data"; }
};

class IoError : public Error {
public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace uoptime
