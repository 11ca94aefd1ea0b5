#pragma once

#include <stdexcept>
#include <string>

namespace icehouse {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document or a graph that violates a structural invariant.
class InvalidInstance : public Error {
 public:
  using Error::Error;
};

/// An exact oracle refused an instance above its hard size limit.
class SizeCapExceeded : public Error {
 public:
  using Error::Error;
};

/// The chain did not produce the requested defect-free samples within its step budget.
class SamplerTimeout : public Error {
 public:
  using Error::Error;
};

/// No ice-rule orientation is consistent with the pinned edges.
class InfeasiblePins : public Error {
 public:
  using Error::Error;
};

/// Arguments outside an operation's documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace icehouse
