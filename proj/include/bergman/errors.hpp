#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point failed the membership test of its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A kernel quantity could not be evaluated (zero kernel, vanishing density).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Normal-coordinate frame could not be built from the metric.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

class SamplerError : public Error {
 public:
  using Error::Error;
};

class UnknownIdentity : public Error {
 public:
  using Error::Error;
};

class CriticalValueError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Analytic and finite-difference references disagree beyond tolerance.
class OracleMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bergman
