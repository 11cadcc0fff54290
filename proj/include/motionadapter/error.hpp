#pragma once

#include <stdexcept>
#include <string>

namespace motionadapter {

/// Failure categories shared by every module. The CLI maps them onto exit
/// codes (see exit_code()).
enum class ErrorKind {
  Io,
  BadMagic,
  UnsupportedVersion,
  Truncated,
  LengthMismatch,
  BadHeader,
  DuplicateName,
  NonFinite,
  ShapeMismatch,
  NegativeEntry,
  ZeroRow,
  OutOfRange,
  MissingRecord,
  InvalidArgument,
  OverlappingMasks,
  EmptyInput,
  SizeLimit,
  Numeric,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::UnsupportedVersion: return "unsupported-version";
    case ErrorKind::Truncated: return "truncated";
    case ErrorKind::LengthMismatch: return "length-mismatch";
    case ErrorKind::BadHeader: return "bad-header";
    case ErrorKind::DuplicateName: return "duplicate-name";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::NegativeEntry: return "negative-entry";
    case ErrorKind::ZeroRow: return "zero-row";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::MissingRecord: return "missing-record";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::OverlappingMasks: return "overlapping-masks";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::SizeLimit: return "size-limit";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 0 ok, 1 I/O, 2 validation, 3 numeric failure.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return 1;
    case ErrorKind::Numeric: return 3;
    default: return 2;
  }
}

}  // namespace motionadapter
