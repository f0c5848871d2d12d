#pragma once

#include <stdexcept>
#include <string>

namespace cgl {

// Root of every error the library throws. Callers that only need to tell
// "our error" from "someone else's" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad value passed by the caller (negative sigma, empty label, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Misconfiguration: unknown mode, malformed range, unresolvable preset.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation called in a state that does not permit it.
class StateError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Challenge generation could not satisfy its constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cgl
