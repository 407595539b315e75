#pragma once

#include <stdexcept>

namespace ichdet {

/// Malformed file contents: bad magic, dimension mismatch, non-finite payload.
class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failures: missing path, unwritable target, truncated stream.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate numerical situations: zero-variance dataset, covariance
/// factorization failing after jitter escalation.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent array shapes between arguments.
class shape_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ichdet
