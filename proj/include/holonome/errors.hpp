#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace holonome {

enum class ErrorKind {
  Syntax,
  UnknownIdentifier,
  Arity,
  Dimension,
  Domain,
  OutOfBranch,
  SingularInput,
  OutOfRange,
  EndpointMismatch,
  NotMonotone,
  OutsideChart,
  SingularGauge,
  StepUnderflow,
  OracleFailure,
  VelocityMismatch,
  IllConditionedBasis,
  NotClosed,
  Schema,
  Validation,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the scenario runner) can report it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::Syntax, what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorKind::Arity: return "ArityError";
    case ErrorKind::Dimension: return "DimensionError";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::OutOfBranch: return "OutOfBranch";
    case ErrorKind::SingularInput: return "SingularInput";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EndpointMismatch: return "EndpointMismatch";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::OutsideChart: return "OutsideChart";
    case ErrorKind::SingularGauge: return "SingularGauge";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::OracleFailure: return "OracleFailure";
    case ErrorKind::VelocityMismatch: return "VelocityMismatch";
    case ErrorKind::IllConditionedBasis: return "IllConditionedBasis";
    case ErrorKind::NotClosed: return "NotClosed";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Validation: return "ValidationError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Error";
}

}  // namespace holonome
