#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace keyframe {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateVectorError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line and the offending field.
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::string field,
             const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": field '" + field +
              "': " + message),
        source_(std::move(source)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string field_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class PoolTooLargeError : public Error {
 public:
  using Error::Error;
};

class InvalidTimeError : public Error {
 public:
  using Error::Error;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

class InsufficientSelectionError : public Error {
 public:
  using Error::Error;
};

}  // namespace keyframe
