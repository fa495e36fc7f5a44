#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crashloc {

/// Base class for every failure raised by the library. A plain `Error`
/// denotes a degenerate or empty result (nothing to rank, no seeds, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input. Carries the offending source and 1-based
/// line number when one is known (line 0 means "whole file").
class InputError : public Error {
 public:
  explicit InputError(const std::string& message) : Error(message) {}

  InputError(std::string source, std::size_t line, const std::string& message)
      : Error(locate(source, line) + message), source_(std::move(source)), line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string locate(const std::string& source, std::size_t line) {
    if (source.empty()) return {};
    if (line == 0) return source + ": ";
    return source + ":" + std::to_string(line) + ": ";
  }

  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace crashloc
