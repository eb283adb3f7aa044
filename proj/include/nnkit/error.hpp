#pragma once

#include <stdexcept>
#include <string>

namespace nnkit {

// Shape/dimension disagreement between tensors or layer configuration.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite or otherwise out-of-domain numeric input.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad hyperparameter value (rate >= 1, scale <= 0, ...).
class ParamError : public std::invalid_argument {
 public:
  explicit ParamError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Operation called in the wrong order (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& msg) : std::logic_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// IDX / WAV / checkpoint files: each malformation is a distinct type so
// callers (and tests) can tell them apart.
class BadMagicError : public IoError {
 public:
  explicit BadMagicError(const std::string& msg) : IoError(msg) {}
};

class TruncatedFileError : public IoError {
 public:
  explicit TruncatedFileError(const std::string& msg) : IoError(msg) {}
};

class CountMismatchError : public IoError {
 public:
  explicit CountMismatchError(const std::string& msg) : IoError(msg) {}
};

}  // namespace nnkit
