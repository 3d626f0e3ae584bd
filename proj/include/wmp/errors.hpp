#pragma once
#include <stdexcept>
#include <string>

namespace wmp {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// model / linear algebra
struct ZeroDegreeCommunity : Error { using Error::Error; };
struct NonStochastic : Error { using Error::Error; };
struct WrongK : Error { using Error::Error; };
struct NotSymmetric : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct ComplexSpectrum : Error { using Error::Error; };
struct InvalidParams : Error { using Error::Error; };

// graph data
struct ParseError : Error { using Error::Error; };
struct UnknownNode : Error { using Error::Error; };

// flow
struct EmptyBoundary : Error { using Error::Error; };
struct DivergentEnergy : Error { using Error::Error; };

// message passing
struct NoBoundaryLabels : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// baselines
struct TooLarge : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };

// harness / cli
struct EmptyEvaluationSet : Error { using Error::Error; };
struct DatasetMissing : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace wmp
