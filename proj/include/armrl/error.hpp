#pragma once

#include <stdexcept>
#include <string>

namespace armrl {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses name the contract broken.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidActionError : public Error {
 public:
  using Error::Error;
};

// API used out of order (stepping a finished episode, reusing a tape, ...).
class UsageError : public Error {
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

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace armrl
