#pragma once

#include <stdexcept>
#include <string>

namespace mspc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Vector/matrix dimensions disagree with each other or with a config.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared during inference or learning.
class DivergenceError : public Error {
 public:
  DivergenceError(std::string layer, const std::string& what)
      : Error(what + " (layer " + layer + ")"), layer_(std::move(layer)) {}

  const std::string& layer() const noexcept { return layer_; }

 private:
  std::string layer_;
};

// Two inputs that are individually valid cannot be used together
// (different template methods, feature sizes that do not fit a model).
class IncompatibleError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  bad_magic,
  version_mismatch,
  checksum_mismatch,
  truncated,
  shape_mismatch,
  malformed,
};

// A file could be read but its content is not acceptable.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace mspc
