#include "subsplit/error.hpp"

namespace subsplit {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidData: return "InvalidData";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NumericalFailure: return "NumericalFailure";
    case Errc::EmptySubcluster: return "EmptySubcluster";
    case Errc::DegenerateCluster: return "DegenerateCluster";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidWeights: return "InvalidWeights";
    case Errc::BadMagic: return "BadMagic";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::CorruptTensor: return "CorruptTensor";
    case Errc::UnsplittablePrior: return "UnsplittablePrior";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace subsplit
