#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subsplit {

enum class Errc {
  InvalidData,
  InvalidParams,
  InvalidConfig,
  NumericalFailure,
  EmptySubcluster,
  DegenerateCluster,
  DimensionMismatch,
  InvalidWeights,
  BadMagic,
  ShapeMismatch,
  CorruptTensor,
  UnsplittablePrior,
  Io,
};

std::string_view to_string(Errc code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace subsplit
