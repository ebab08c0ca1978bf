#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace formdom {

enum class ErrorKind {
  SupportViolation,
  DimensionMismatch,
  GridMismatch,
  NotAccretive,
  NotHermitian,
  NotRealForm,
  NegativeTime,
  EmptyTimeGrid,
  DominatorNotPositive,
  NotDominated,
  PreconditionsNotMet,
  TheoremViolation,
  NotLocal,
  SolverDiverged,
  InfeasibleTarget,
  BadConfig,
  ParseError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SupportViolation: return "SupportViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::NotAccretive: return "NotAccretive";
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotRealForm: return "NotRealForm";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::EmptyTimeGrid: return "EmptyTimeGrid";
    case ErrorKind::DominatorNotPositive: return "DominatorNotPositive";
    case ErrorKind::NotDominated: return "NotDominated";
    case ErrorKind::PreconditionsNotMet: return "PreconditionsNotMet";
    case ErrorKind::TheoremViolation: return "TheoremViolation";
    case ErrorKind::NotLocal: return "NotLocal";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace formdom
