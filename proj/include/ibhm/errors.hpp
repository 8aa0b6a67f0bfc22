#pragma once

#include <stdexcept>
#include <string>

namespace ibhm {

/// Broad failure classes. The CLI maps them onto process exit codes.
enum class ErrorKind { config, data, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Invalid parameters or violated preconditions.
struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::config, w) {}
};

// Argument outside the domain of a function (position off the span, band above Nyquist...).
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

struct ResonanceError : NumericalError {
  explicit ResonanceError(const std::string& w) : NumericalError(w) {}
};

struct InstabilityError : NumericalError {
  explicit InstabilityError(const std::string& w) : NumericalError(w) {}
};

struct MeshTooCoarseError : ValidationError {
  explicit MeshTooCoarseError(const std::string& w) : ValidationError(w) {}
};

struct IdentificationError : DataError {
  explicit IdentificationError(const std::string& w) : DataError(w) {}
};

struct BandConflictError : ValidationError {
  explicit BandConflictError(const std::string& w) : ValidationError(w) {}
};

struct NoEstimateError : DataError {
  explicit NoEstimateError(const std::string& w) : DataError(w) {}
};

struct CalibrationError : DataError {
  explicit CalibrationError(const std::string& w) : DataError(w) {}
};

inline int exit_code(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 1;
}

}  // namespace ibhm
