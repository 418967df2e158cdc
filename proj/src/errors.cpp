#include "flapsim/errors.hpp"

namespace flapsim {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "Ok";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kBranchJump: return "BranchJump";
    case ErrorCode::kSingularMassMatrix: return "SingularMassMatrix";
    case ErrorCode::kNonPositiveDefinite: return "NonPositiveDefinite";
    case ErrorCode::kSimDiverged: return "SimDiverged";
    case ErrorCode::kBudgetExhausted: return "BudgetExhausted";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace flapsim
