#include "vbmi/error.hpp"

namespace vbmi {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnknownCategoryLabel: return "UnknownCategoryLabel";
    case ErrorCode::NonNumericContinuousCell: return "NonNumericContinuousCell";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::UnfilledCovariate: return "UnfilledCovariate";
    case ErrorCode::NoObservedResponses: return "NoObservedResponses";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::EmptyObservedSet: return "EmptyObservedSet";
    case ErrorCode::TooFewImputations: return "TooFewImputations";
    case ErrorCode::NotCategorical: return "NotCategorical";
    case ErrorCode::CalibrationFailure: return "CalibrationFailure";
  }
  return "Unknown";
}

}  // namespace vbmi
