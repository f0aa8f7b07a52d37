#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hwocr {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A file could not be read, decoded or cross-validated.
class LoadError : public Error {
 public:
  LoadError(std::string file, const std::string& what)
      : Error(file + ": " + what), file_(std::move(file)) {}

  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

}  // namespace hwocr
