#pragma once

#include <stdexcept>
#include <string>

namespace trimodal {

// Base for every error this library throws. Callers that only care about
// "did it work" catch this; tools map subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace trimodal
