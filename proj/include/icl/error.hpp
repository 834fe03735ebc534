#pragma once

#include <stdexcept>
#include <string>

namespace icl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A factorization or iteration broke down (non-PD pivot, SVD sweep cap).
class NumericFailure : public Error {
 public:
  using Error::Error;
};

/// Noise calibration requested for a family without finite variance.
class UnsupportedCalibration : public Error {
 public:
  using Error::Error;
};

/// Object used out of sequence, e.g. a forward trace after a parameter update.
class InvalidState : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

/// Bad experiment configuration: unknown key, type mismatch, missing file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace icl
