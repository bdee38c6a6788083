#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace motionprog {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text. `record` is the 1-based line (csv) or 0-based frame
// index (json) at which parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t record)
      : Error(what + " (record " + std::to_string(record) + ")"), record_(record) {}
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

// Shapes that do not agree: joint counts, frame counts, boundaries.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class UnrecoverableTrackError : public Error {
 public:
  using Error::Error;
};

class InputTooShortError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class NoLoopError : public Error {
 public:
  using Error::Error;
};

}  // namespace motionprog
