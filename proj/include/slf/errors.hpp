#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax or identifier problems in coefficient expressions. position is the
// byte offset into the source text.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// log of a non-positive number, division by zero, etc.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NonSmoothPoint : public Error {
 public:
  using Error::Error;
};

class SmoothPoint : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace slf
