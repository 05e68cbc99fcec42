#pragma once

#include <stdexcept>
#include <string>

namespace cracklab {

/// Base class for all cracklab errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define CRACKLAB_ERROR(Name)                                  \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& msg) : Error(msg) {}     \
  }

// geometry
CRACKLAB_ERROR(BehindCamera);
CRACKLAB_ERROR(OutOfRange);

// io
CRACKLAB_ERROR(UnsupportedFormat);
CRACKLAB_ERROR(NonMonotonicTimestamps);
CRACKLAB_ERROR(DimensionMismatch);
CRACKLAB_ERROR(IoError);

// calibration
CRACKLAB_ERROR(NoVisiblePoints);
CRACKLAB_ERROR(EmptyHistogram);
CRACKLAB_ERROR(DegenerateJoint);
CRACKLAB_ERROR(NonFiniteObjective);

// mask pipeline
CRACKLAB_ERROR(EmptySkeleton);
CRACKLAB_ERROR(NoClusters);
CRACKLAB_ERROR(RefinerError);

// denoise
CRACKLAB_ERROR(TooFewPoints);
CRACKLAB_ERROR(InsufficientNeighbors);
CRACKLAB_ERROR(DegenerateNeighborhood);

// fusion
CRACKLAB_ERROR(DegeneratePoint);

// metrology
CRACKLAB_ERROR(SeedOffSkeleton);
CRACKLAB_ERROR(ZeroGradient);
CRACKLAB_ERROR(SeedOutsideMask);
CRACKLAB_ERROR(OpenBoundary);
CRACKLAB_ERROR(RayMiss);
CRACKLAB_ERROR(NoProjectableSamples);
CRACKLAB_ERROR(EmptyInput);
CRACKLAB_ERROR(NonPositiveReference);

// synth
CRACKLAB_ERROR(NotOnCrack);
CRACKLAB_ERROR(InvalidSpec);

#undef CRACKLAB_ERROR

/// Parse failure with the offending location (line for text, byte offset
/// for binary payloads).
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line_or_offset)
      : Error(msg + " (at " + std::to_string(line_or_offset) + ")"),
        location(line_or_offset) {}
  explicit ParseError(const std::string& msg) : Error(msg), location(0) {}
  std::size_t location;
};

}  // namespace cracklab
