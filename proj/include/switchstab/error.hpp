#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace switchstab {

enum class ErrorCode {
  InvalidArgument,
  SingularMatrix,
  MissingOutputMap,
  WeightDomain,
  EventOverflow,
  NonFiniteState,
  DegenerateDenominator,
  SingularClosure,
  CurrentLimit,
  NoBracket,
  SingularCombination,
  DegenerateDifference,
  ZeroD2,
  AuditFailure,
  DimensionUnsupported,
  BadSampleCount,
  AllInvalid,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// True for the errors that mean "the stability criterion does not apply to
/// this parameter group", as opposed to a malformed input.
bool is_criterion_inapplicable(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace switchstab
