#pragma once

#include <stdexcept>
#include <string>

namespace lumen {

// Base for every error the library reports.  Subclasses name the failure
// class so callers (and the CLI) can map them to distinct exit paths.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Input bytes or files that do not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Entropy-coded payload could not be decoded (truncation, desync, bad ids).
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Object used in a state that does not allow the operation.
class StateError : public Error {
 public:
  using Error::Error;
};

// Model/container configuration mismatch (e.g. quality index).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Training data directory is incomplete or inconsistent.
class IngestionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lumen
