#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cabench {

// Base for every error the library raises. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
  using Error::Error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

// Malformed text input. `line` is 1-based, 0 when not tied to a file line.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& what, std::size_t line = 0)
      : ParseError(what, line, std::string()) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

  // Same error, attributed to `file` (and to `line` when this one has none).
  ParseError in_file(const std::string& file, std::size_t line = 0) const {
    return ParseError(detail_, line_ ? line_ : line, file);
  }

private:
  ParseError(const std::string& what, std::size_t line, const std::string& file)
      : Error((file.empty() ? "" : file + ": ") + (line ? "line " + std::to_string(line) + ": " : "") + what),
        line_(line),
        detail_(what) {}

  std::size_t line_;
  std::string detail_;
};

class IoError : public Error {
public:
  IoError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

// Observations that no deterministic rule could have produced.
class InconsistentOrbit : public Error {
public:
  using Error::Error;
};

class IncompleteReport : public Error {
public:
  using Error::Error;
};

class AlignmentError : public Error {
public:
  using Error::Error;
};

// Invariant broken inside the library itself.
class InternalError : public Error {
public:
  using Error::Error;
};

}  // namespace cabench
