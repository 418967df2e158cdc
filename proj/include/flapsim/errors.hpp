#pragma once

#include <stdexcept>
#include <string>

namespace flapsim {

// Every failure the library reports carries one of these codes. The CLI maps
// each code onto its own process exit status.
enum class ErrorCode : int {
  kOk = 0,
  kParse = 2,
  kValidation = 3,
  kNoConvergence = 4,
  kBranchJump = 5,
  kSingularMassMatrix = 6,
  kNonPositiveDefinite = 7,
  kSimDiverged = 8,
  kBudgetExhausted = 9,
  kTooShort = 10,
  kIo = 11,
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

#define FLAPSIM_DEFINE_ERROR(Name, Code)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

FLAPSIM_DEFINE_ERROR(ParseError, kParse)
FLAPSIM_DEFINE_ERROR(NoConvergence, kNoConvergence)
FLAPSIM_DEFINE_ERROR(BranchJump, kBranchJump)
FLAPSIM_DEFINE_ERROR(SingularMassMatrix, kSingularMassMatrix)
FLAPSIM_DEFINE_ERROR(NonPositiveDefinite, kNonPositiveDefinite)
FLAPSIM_DEFINE_ERROR(SimDiverged, kSimDiverged)
FLAPSIM_DEFINE_ERROR(TooShort, kTooShort)
FLAPSIM_DEFINE_ERROR(IoError, kIo)

#undef FLAPSIM_DEFINE_ERROR

// Validation failures name the offending configuration key.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(ErrorCode::kValidation, key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace flapsim
