#pragma once

#include <stdexcept>
#include <string>

namespace p2r {

/// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Image or map resolutions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A structured document does not conform to its schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A parsed document violates a semantic invariant (e.g. object out of room).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// No primitive record matches the requested category.
class RetrievalError : public Error {
 public:
  using Error::Error;
};

/// Viewpoint sampling found no admissible camera position.
class SelectionError : public Error {
 public:
  using Error::Error;
};

/// Scale-shift fit has no usable solution (zero variance or negative scale).
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Too few jointly valid pixels to fit scale and shift.
class InsufficientOverlapError : public Error {
 public:
  using Error::Error;
};

/// Registration produced a non-finite loss.
class OptimizationError : public Error {
 public:
  OptimizationError(const std::string& msg, int level) : Error(msg), level_(level) {}
  int level() const { return level_; }

 private:
  int level_ = -1;
};

/// A synthesis backend failed, timed out, or returned an error reply.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// The wire protocol stream is malformed.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A backend or module was invoked without required context.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// File read/write failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace p2r
