#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fairpool {

enum class ErrorCode {
  // model construction and the DSL
  SyntaxError,
  UndeclaredVariable,
  DuplicateDeclaration,
  InvalidParameter,
  CyclicModel,
  // evaluation
  IncompleteContext,
  DivisionByZero,
  InterventionOnExogenous,
  InterventionOnUndeclared,
  UnknownVertex,
  // evidence, encodings, fairness specs
  UnknownToken,
  UnknownVariable,
  OverlappingPartition,
  IncompletePartition,
  PredictorInPartition,
  // aggregation
  EmptyVotes,
  MismatchedVertexSets,
  // Monte Carlo and pooling
  MissingEvidence,
  ZeroSamples,
  InfiniteSupport,
  TooFewSamples,
  NonpositiveBandwidth,
  EmptyInput,
  GridMismatch,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

struct SourceLocation {
  std::size_t line = 1;
  std::size_t column = 1;

  friend bool operator==(const SourceLocation&, const SourceLocation&) = default;
};

/// Every failure raised by the library. `where()` is set for errors that
/// originate in a text document.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<SourceLocation> where = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  const std::optional<SourceLocation>& where() const noexcept { return where_; }
  /// Message without the code/location prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::optional<SourceLocation> where_;
  std::string detail_;
};

}  // namespace fairpool
