#pragma once

#include <stdexcept>

namespace asmc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AllWeightsDegenerate : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct CovarianceNotFactorizable : Error {
  using Error::Error;
};

struct InvalidScaling : Error {
  using Error::Error;
};

struct TargetEvaluationFailure : Error {
  using Error::Error;
};

struct EmptyMenu : Error {
  using Error::Error;
};

struct LengthMismatch : Error {
  using Error::Error;
};

struct UnknownDataset : Error {
  using Error::Error;
};

struct TooFewRuns : Error {
  using Error::Error;
};

}  // namespace asmc
