#include "brownlab/errors.hpp"

namespace brownlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OutOfRegion: return "OutOfRegion";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::SingularInitialPoint: return "SingularInitialPoint";
    case ErrorCode::ShootingDiverged: return "ShootingDiverged";
    case ErrorCode::ZeroDensity: return "ZeroDensity";
    case ErrorCode::OutsideSource: return "OutsideSource";
    case ErrorCode::OutsideTarget: return "OutsideTarget";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::MissingLowerWord: return "MissingLowerWord";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
  }
  return "Unknown";
}

NumericalError::NumericalError(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

}  // namespace brownlab
