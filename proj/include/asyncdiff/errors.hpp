#pragma once

#include <stdexcept>
#include <string>

namespace asyncdiff {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// topology
struct ColumnSumError : Error { using Error::Error; };
struct NegativeWeight : Error { using Error::Error; };
struct NeighborhoodMismatch : Error { using Error::Error; };
struct ModeError : Error { using Error::Error; };
struct NotPrimitive : Error { using Error::Error; };

// regression
struct DimensionError : Error { using Error::Error; };
struct NonPositiveDefinite : Error { using Error::Error; };
struct SingularSystem : Error { using Error::Error; };

// diffusion
struct NonFiniteIterate : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };
struct EmptyTail : Error { using Error::Error; };

// theory
struct ShapeError : Error { using Error::Error; };
struct UnstableSpectrum : Error { using Error::Error; };

// shared
struct IndexError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct UnknownPreset : Error { using Error::Error; };

}  // namespace asyncdiff
