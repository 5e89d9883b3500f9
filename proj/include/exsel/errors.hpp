#ifndef EXSEL_ERRORS_HPP
#define EXSEL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exsel {

// A record in a dataset, config, or parameter file violates a documented invariant.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input text could not be parsed at all; byte_offset points at the failure.
struct ParseError : std::runtime_error {
  std::size_t byte_offset;
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), byte_offset(offset) {}
};

// A run configuration is self-inconsistent or out of range.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector/matrix shapes disagree (e.g. params trained at another embedding width).
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A saved file has the wrong magic header or an unsupported version.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure: missing path, unreadable file, failed write.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Base for completion-backend failures.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The endpoint rejected our credentials (HTTP 401/403).
struct AuthError : BackendError {
  using BackendError::BackendError;
};

// Connection/timeout/5xx failure that persisted through retries.
struct TransportError : BackendError {
  using BackendError::BackendError;
};

// The endpoint answered, but not with the JSON shape we expect.
struct MalformedResponseError : BackendError {
  using BackendError::BackendError;
};

}  // namespace exsel

#endif  // EXSEL_ERRORS_HPP
