#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spectraprune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument value (out-of-range rank, keep fraction, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operand shapes are incompatible.
class ShapeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

enum class ParseErrorKind {
  kBadMagic,
  kUnsupportedVersion,
  kBadHeader,
  kUnsupportedDtype,
  kFortranOrder,
  kBadShape,
  kTruncatedPayload,
  kNonFiniteValue,
};

const char* to_string(ParseErrorKind kind) noexcept;

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, std::size_t offset, const std::string& detail);
  ParseErrorKind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
  std::string detail_;
};

}  // namespace spectraprune
