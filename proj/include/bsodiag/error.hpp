#pragma once

#include <stdexcept>
#include <string>

namespace bsodiag {

/// Base class for every error raised by the diagnosis engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. `where` names the file/line/field.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (bad durations, probabilities out of range, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numeric alert whose description does not match the catalog pattern.
class IntensityError : public Error {
 public:
  using Error::Error;
};

/// Device serial number absent from the CMDB.
class CmdbLookupError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values reached a numeric routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Diagnosis aborted because failure detection produced no candidate events.
class NoCandidatesError : public Error {
 public:
  using Error::Error;
};

/// A metric that is undefined for its input (empty case list, zero counts).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Scenario generation could not satisfy the topology or chain constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace bsodiag
