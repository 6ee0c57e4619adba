#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace tesspec {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the physical or numerical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed record or file layout. Carries the byte offset when known.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what,
                       std::optional<std::uint64_t> byte_offset = std::nullopt)
      : Error(what), byte_offset_(byte_offset) {}

  std::optional<std::uint64_t> byte_offset() const noexcept { return byte_offset_; }

 private:
  std::optional<std::uint64_t> byte_offset_;
};

/// Input data insufficient for the requested analysis (empty histogram,
/// too few counts, no peaks).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Not enough usable one-photon records to build a master pulse.
class CalibrationDataError : public DataError {
 public:
  using DataError::DataError;
};

/// Diagnostics attached to a failed least-squares fit.
struct FitDiagnostics {
  int iterations = 0;
  double cost = 0.0;
  double lambda = 0.0;
  std::string reason;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, FitDiagnostics diagnostics)
      : Error(what + " (" + diagnostics.reason + ", iterations=" +
              std::to_string(diagnostics.iterations) + ")"),
        diagnostics_(std::move(diagnostics)) {}

  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  FitDiagnostics diagnostics_;
};

/// Detector response curve that cannot be built or is not monotone.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Value outside the image or validity range of a calibration.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tesspec
