#pragma once

#include <stdexcept>
#include <string>

namespace graphon {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Truncation rank falls inside a group of eigenvalues of equal magnitude.
class AmbiguousTruncation : public Error {
 public:
  using Error::Error;
};

/// Top eigenvalue is not positive; the graph is too small or too sparse.
class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

/// Fitted density has no positive mass, or violates its envelope.
class UnusableFit : public Error {
 public:
  using Error::Error;
};

/// Requested table would exceed the configured memory cap.
class MemoryGuard : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. The message carries the location.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where), detail_(what) {}
  const std::string& where() const noexcept { return where_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string where_;
  std::string detail_;
};

class UnsupportedVersion : public Error {
 public:
  using Error::Error;
};

/// A stage input was produced under a different configuration.
class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

/// Ground-truth diagnostics requested without simulator latents.
class DiagnosticsUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace graphon
