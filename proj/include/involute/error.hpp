#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace involute {

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(std::size_t pivot)
      : Error("singular matrix: pivot " + std::to_string(pivot) +
              " below tolerance"),
        pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class NotInvolutory : public Error {
 public:
  using Error::Error;
};

class IdentityExcluded : public Error {
 public:
  IdentityExcluded()
      : Error("identity matrix has no nontrivial involutory partition") {}
};

class IncompatibleOffset : public Error {
 public:
  using Error::Error;
};

class UnsupportedParity : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace involute
