#pragma once

#include <stdexcept>
#include <string>

namespace brownlab {

enum class ErrorCode {
  SingularPoint,
  NoConvergence,
  OutOfRegion,
  GridTooCoarse,
  SingularInitialPoint,
  ShootingDiverged,
  ZeroDensity,
  OutsideSource,
  OutsideTarget,
  StepTooLarge,
  MissingLowerWord,
  CholeskyFailure,
};

const char* to_string(ErrorCode code);

// Rejected input: inadmissible parameters, malformed measures, bad options.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that could not reach its postcondition.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorCode code, const std::string& detail);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace brownlab
