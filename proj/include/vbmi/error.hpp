#pragma once

#include <stdexcept>
#include <string>

namespace vbmi {

enum class ErrorCode {
  MissingColumn,
  UnknownCategoryLabel,
  NonNumericContinuousCell,
  EmptyDataset,
  IoFailure,
  InvalidSchema,
  UnfilledCovariate,
  NoObservedResponses,
  DegenerateDenominator,
  SingularSystem,
  NumericalFailure,
  DimensionMismatch,
  CholeskyFailure,
  InvalidArgument,
  AllMissingColumn,
  EmptyObservedSet,
  TooFewImputations,
  NotCategorical,
  CalibrationFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vbmi
