#pragma once

#include <stdexcept>
#include <string>

namespace bubblesim {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input data could not be parsed (carries file/line context in the message).
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value or reference violated a contract (unknown item, bad rating, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The candidate pool for a recommendation page is empty.
class CatalogExhausted : public Error {
 public:
  using Error::Error;
};

// LLM endpoint failures (exhausted retries, malformed replies, hard 4xx).
class LlmError : public Error {
 public:
  using Error::Error;
};

}  // namespace bubblesim
