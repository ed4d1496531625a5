#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvs {

/// Failure categories surfaced by the library. The CLI maps them to exit codes.
enum class ErrorKind {
  DisconnectedGraph,
  DuplicateId,
  UnknownBusReference,
  NonpositiveReactance,
  SingularSusceptanceMatrix,
  DimensionMismatch,
  IslandingOutage,
  RaggedSeries,
  UnknownBus,
  NonmonotoneTimestamps,
  CurtailmentBoundViolation,
  ZeroMeanSeries,
  InfeasibleModel,
  UnboundedModel,
  NumericalBreakdown,
  SolutionInconsistency,
  DegenerateRebalance,
  BaselineDimensionMismatch,
  InvalidInput,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tvs
