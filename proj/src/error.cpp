#include "switchstab/error.hpp"

namespace switchstab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::MissingOutputMap: return "MissingOutputMap";
    case ErrorCode::WeightDomain: return "WeightDomain";
    case ErrorCode::EventOverflow: return "EventOverflow";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::SingularClosure: return "SingularClosure";
    case ErrorCode::CurrentLimit: return "CurrentLimit";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::SingularCombination: return "SingularCombination";
    case ErrorCode::DegenerateDifference: return "DegenerateDifference";
    case ErrorCode::ZeroD2: return "ZeroD2";
    case ErrorCode::AuditFailure: return "AuditFailure";
    case ErrorCode::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorCode::BadSampleCount: return "BadSampleCount";
    case ErrorCode::AllInvalid: return "AllInvalid";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

bool is_criterion_inapplicable(ErrorCode code) {
  return code == ErrorCode::NoBracket || code == ErrorCode::ZeroD2 ||
         code == ErrorCode::DegenerateDifference;
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace switchstab
