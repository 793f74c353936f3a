#pragma once

#include <stdexcept>
#include <string>

namespace cshap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed graph, data, model or run configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Structural problems in a causal chain graph.
class StructureError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Covariance not positive definite, singular conditioning block.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A feature combination the distribution model cannot handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Conditioning on an event of probability zero in a discrete table.
class ZeroProbabilityError : public Error {
 public:
  using Error::Error;
};

// External predictor misbehaved; `raw` carries the offending line or diagnostic.
class PredictorError : public Error {
 public:
  PredictorError(const std::string& what, std::string raw)
      : Error(raw.empty() ? what : what + ": " + raw), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace cshap
