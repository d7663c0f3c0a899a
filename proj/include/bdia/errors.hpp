#pragma once

#include <stdexcept>
#include <string>

namespace bdia {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGridError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// Raised when an inverse is requested for a map that has none (gamma = 0,
// p = 0, gamma1 = gamma2).
class NonInvertibleError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values produced during integration.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace bdia
