#include "tvs/error.hpp"

namespace tvs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::UnknownBusReference: return "UnknownBusReference";
    case ErrorKind::NonpositiveReactance: return "NonpositiveReactance";
    case ErrorKind::SingularSusceptanceMatrix: return "SingularSusceptanceMatrix";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::IslandingOutage: return "IslandingOutage";
    case ErrorKind::RaggedSeries: return "RaggedSeries";
    case ErrorKind::UnknownBus: return "UnknownBus";
    case ErrorKind::NonmonotoneTimestamps: return "NonmonotoneTimestamps";
    case ErrorKind::CurtailmentBoundViolation: return "CurtailmentBoundViolation";
    case ErrorKind::ZeroMeanSeries: return "ZeroMeanSeries";
    case ErrorKind::InfeasibleModel: return "InfeasibleModel";
    case ErrorKind::UnboundedModel: return "UnboundedModel";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::SolutionInconsistency: return "SolutionInconsistency";
    case ErrorKind::DegenerateRebalance: return "DegenerateRebalance";
    case ErrorKind::BaselineDimensionMismatch: return "BaselineDimensionMismatch";
    case ErrorKind::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

}  // namespace tvs
