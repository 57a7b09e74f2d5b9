#include "fairpool/error.hpp"

namespace fairpool {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UndeclaredVariable: return "UndeclaredVariable";
    case ErrorCode::DuplicateDeclaration: return "DuplicateDeclaration";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::CyclicModel: return "CyclicModel";
    case ErrorCode::IncompleteContext: return "IncompleteContext";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::InterventionOnExogenous: return "InterventionOnExogenous";
    case ErrorCode::InterventionOnUndeclared: return "InterventionOnUndeclared";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::OverlappingPartition: return "OverlappingPartition";
    case ErrorCode::IncompletePartition: return "IncompletePartition";
    case ErrorCode::PredictorInPartition: return "PredictorInPartition";
    case ErrorCode::EmptyVotes: return "EmptyVotes";
    case ErrorCode::MismatchedVertexSets: return "MismatchedVertexSets";
    case ErrorCode::MissingEvidence: return "MissingEvidence";
    case ErrorCode::ZeroSamples: return "ZeroSamples";
    case ErrorCode::InfiniteSupport: return "InfiniteSupport";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonpositiveBandwidth: return "NonpositiveBandwidth";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message,
                           const std::optional<SourceLocation>& where) {
  std::string out(to_string(code));
  if (where) {
    out += " at " + std::to_string(where->line) + ":" + std::to_string(where->column);
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<SourceLocation> where)
    : std::runtime_error(format_message(code, message, where)),
      code_(code),
      where_(where),
      detail_(message) {}

}  // namespace fairpool
