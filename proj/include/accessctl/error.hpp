// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace accessctl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input. `location` is a 1-based line number for
/// line-oriented formats and a 0-based character offset for expressions.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t location)
      : Error(message), location_(location) {}

  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

}  // namespace accessctl
