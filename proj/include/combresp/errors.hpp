#pragma once

#include <stdexcept>
#include <string>

namespace combresp {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// constraints
struct DimensionMismatch : Error { using Error::Error; };
struct InvalidEntry : Error { using Error::Error; };
struct SizeLimitExceeded : Error { using Error::Error; };
struct EmptyGraph : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct SelfPair : Error { using Error::Error; };

// transform
struct DegenerateInput : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct InfeasibleY : Error { using Error::Error; };

// polytope
struct RejectionBudgetExhausted : Error { using Error::Error; };
struct NotInterior : Error { using Error::Error; };

// distributions
struct InvalidInterval : Error { using Error::Error; };
struct NotPositiveDefinite : Error { using Error::Error; };

// mcmc
struct InitFailed : Error { using Error::Error; };
struct EmptyDualPolytope : Error { using Error::Error; };
struct GroupEmpty : Error { using Error::Error; };
struct InfeasibleRow : Error { using Error::Error; };

// inference
struct ShapeMismatch : Error { using Error::Error; };
struct SeriesTooShort : Error { using Error::Error; };
struct ZeroVariance : Error { using Error::Error; };
struct EmptyChain : Error { using Error::Error; };
struct ConditioningTooRare : Error { using Error::Error; };
struct EstimateUnstable : Error { using Error::Error; };
struct InsufficientPoints : Error { using Error::Error; };

// io / cli
struct ParseError : Error { using Error::Error; };

}  // namespace combresp
