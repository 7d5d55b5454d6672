#include "kamtools/error.hpp"

namespace kamtools {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateConversion: return "DegenerateConversion";
    case ErrorCode::StepLimitExceeded: return "StepLimitExceeded";
    case ErrorCode::InvalidEta: return "InvalidEta";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NoPeak: return "NoPeak";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::FlatDerivative: return "FlatDerivative";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::ContextMismatch: return "ContextMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonAdmissibleGenerator: return "NonAdmissibleGenerator";
    case ErrorCode::SmallDivisor: return "SmallDivisor";
    case ErrorCode::DegenerateTwist: return "DegenerateTwist";
    case ErrorCode::NotQuadratic: return "NotQuadratic";
    case ErrorCode::ZeroBound: return "ZeroBound";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace kamtools
