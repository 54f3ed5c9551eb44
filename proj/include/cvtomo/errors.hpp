#pragma once

#include <stdexcept>
#include <string>

namespace cvtomo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

/// Raised when truncation leakage exceeds tolerance; carries the cutoff that would suffice.
class CutoffTooSmall : public Error {
 public:
  CutoffTooSmall(const std::string& what, int required_dim)
      : Error(what), required_dim_(required_dim) {}
  int required_dim() const noexcept { return required_dim_; }

 private:
  int required_dim_;
};

class HeraldImpossible : public Error {
 public:
  using Error::Error;
};

class InvalidMode : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class AmbiguousMode : public Error {
 public:
  using Error::Error;
};

class NoData : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingArtifacts : public Error {
 public:
  using Error::Error;
};

}  // namespace cvtomo
