#pragma once

#include <stdexcept>
#include <string>

namespace kamtools {

enum class ErrorCode {
  InvalidArgument = 1,
  DegenerateConversion,
  StepLimitExceeded,
  InvalidEta,
  DomainError,
  NoPeak,
  InsufficientData,
  InsufficientSamples,
  BracketInvalid,
  BudgetExceeded,
  FlatDerivative,
  MaxIterExceeded,
  ContextMismatch,
  IndexOutOfRange,
  NonAdmissibleGenerator,
  SmallDivisor,
  DegenerateTwist,
  NotQuadratic,
  ZeroBound,
  Io,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kamtools
