#pragma once

#include <stdexcept>
#include <string>

namespace uwbtr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Analytic anchor seed cannot be solved (projected tag geometry is rank deficient).
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// Batch solver hit its iteration cap, or the window failed its observability guard.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Repeat-pass detection does not match the next anchor map entry.
class IdMismatch : public Error {
 public:
  using Error::Error;
};

/// More than one anchor heard during the static repeat initialization.
class MultipleAnchors : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace uwbtr
