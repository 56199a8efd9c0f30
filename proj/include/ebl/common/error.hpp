#pragma once

#include <stdexcept>
#include <string>

namespace ebl {

// Exit-code classes used by the command-line frontend:
// validation -> 1, numeric/runtime -> 2, I/O and file format -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }
  int exit_code() const noexcept override { return 1; }

 private:
  std::string field_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Malformed text or binary input. Line and column are 1-based; 0 means unknown.
class FormatError : public IoError {
 public:
  FormatError(const std::string& source, std::size_t line, std::size_t column,
              const std::string& what)
      : IoError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " +
                what),
        line_(line),
        column_(column) {}

  explicit FormatError(const std::string& what) : IoError(what) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

// Raised when a polygon is not simple; names the offending shape.
class GeometryError : public ValidationError {
 public:
  GeometryError(const std::string& shape, const std::string& what)
      : ValidationError("shape '" + shape + "'", what), shape_(shape) {}

  const std::string& shape() const noexcept { return shape_; }

 private:
  std::string shape_;
};

inline void require(bool condition, const char* field, const std::string& what) {
  if (!condition) throw ValidationError(field, what);
}

}  // namespace ebl
