#pragma once

#include <set>
#include <span>
#include <string>

#include "fairpool/model.hpp"

namespace fairpool {

/// Partition of every variable except the predictor into protected
/// attributes A and features X.
struct FairnessSpec {
  std::set<std::string> protected_attributes;
  std::set<std::string> features;
  std::string predictor;

  /// Checks the partition against every model: OverlappingPartition,
  /// PredictorInPartition, UnknownVariable, IncompletePartition, and
  /// InvalidArgument when a model's predictor differs.
  void validate(std::span<const ProbabilisticCausalModel> models) const;

  friend bool operator==(const FairnessSpec&, const FairnessSpec&) = default;
};

}  // namespace fairpool
