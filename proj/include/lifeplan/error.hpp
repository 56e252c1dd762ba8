#pragma once

#include <stdexcept>
#include <string>

namespace lifeplan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or an ill-formed model/network.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (config, network, policy).
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CycleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Policy file was produced for a different model.
class FingerprintMismatch : public Error {
 public:
  using Error::Error;
};

/// Observation with zero likelihood under the current belief.
class ImpossibleObservation : public Error {
 public:
  using Error::Error;
};

}  // namespace lifeplan
