#pragma once

#include <stdexcept>
#include <string>

namespace cps {

// Process exit codes double as error categories. Keep in sync with README.
enum class ErrorCode : int {
  kGeneric = 1,
  kUsage = 2,
  kSchema = 3,
  kUnit = 4,
  kDimension = 5,
  kUncontrollable = 6,
  kUnsupportedShape = 7,
  kNonFiniteState = 8,
  kDelayBudgetExceeded = 9,
  kNonPositiveDistance = 10,
  kZeroRate = 11,
  kInfeasible = 12,
  kTooLarge = 13,
  kStabilityViolation = 14,
  kDeadlineViolation = 15,
  kPerformanceViolation = 16,
  kOracleMismatch = 17,
  kIo = 18,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }
  const char* name() const noexcept;

 private:
  ErrorCode code_;
};

#define CPS_DEFINE_ERROR(Name, Code)                                        \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

CPS_DEFINE_ERROR(SchemaError, kSchema)
CPS_DEFINE_ERROR(UnitError, kUnit)
CPS_DEFINE_ERROR(DimensionMismatch, kDimension)
CPS_DEFINE_ERROR(UncontrollablePair, kUncontrollable)
CPS_DEFINE_ERROR(UnsupportedShape, kUnsupportedShape)
CPS_DEFINE_ERROR(NonFiniteState, kNonFiniteState)
CPS_DEFINE_ERROR(DelayBudgetExceeded, kDelayBudgetExceeded)
CPS_DEFINE_ERROR(NonPositiveDistance, kNonPositiveDistance)
CPS_DEFINE_ERROR(ZeroRate, kZeroRate)
CPS_DEFINE_ERROR(Infeasible, kInfeasible)
CPS_DEFINE_ERROR(TooLarge, kTooLarge)
CPS_DEFINE_ERROR(StabilityViolation, kStabilityViolation)
CPS_DEFINE_ERROR(DeadlineViolation, kDeadlineViolation)

#undef CPS_DEFINE_ERROR

inline const char* Error::name() const noexcept {
  switch (code_) {
    case ErrorCode::kUsage: return "UsageError";
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kUnit: return "UnitError";
    case ErrorCode::kDimension: return "DimensionMismatch";
    case ErrorCode::kUncontrollable: return "UncontrollablePair";
    case ErrorCode::kUnsupportedShape: return "UnsupportedShape";
    case ErrorCode::kNonFiniteState: return "NonFiniteState";
    case ErrorCode::kDelayBudgetExceeded: return "DelayBudgetExceeded";
    case ErrorCode::kNonPositiveDistance: return "NonPositiveDistance";
    case ErrorCode::kZeroRate: return "ZeroRate";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kStabilityViolation: return "StabilityViolation";
    case ErrorCode::kDeadlineViolation: return "DeadlineViolation";
    case ErrorCode::kPerformanceViolation: return "PerformanceViolation";
    case ErrorCode::kOracleMismatch: return "OracleMismatch";
    case ErrorCode::kIo: return "IoError";
    default: return "Error";
  }
}

}  // namespace cps
