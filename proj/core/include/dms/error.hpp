#pragma once

#include <stdexcept>
#include <string>

namespace dms {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied something outside an operation's domain
/// (dimension mismatch, non-positive variance, alpha out of range, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// alpha at exactly 0 or 1, where the skew divergence reduces to a
/// one-sided KLD.
class DegenerateAlphaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A mixture has no active component left to assign to or select from.
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

/// Feature / state / config file problems.
class ParseError : public Error {
 public:
  enum class Kind { kEmpty, kMalformedHeader, kNonFinite, kTruncated, kBadValue };

  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace dms
