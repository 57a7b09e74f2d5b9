#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairpool/diagram.hpp"
#include "fairpool/fairness_spec.hpp"

namespace fairpool {

enum class AggregationRule { StrictMajority, Intersection, Union };
enum class AlgorithmOrder { RemovalPooling, PoolingRemoval };

struct TieBreak {
  enum class Kind { Lexicographic, SeededRandom };
  Kind kind = Kind::Lexicographic;
  std::uint64_t seed = 0;

  static TieBreak lexicographic() { return {}; }
  static TieBreak seeded(std::uint64_t seed) { return {Kind::SeededRandom, seed}; }
};

struct AggregationConfig {
  AggregationRule rule = AggregationRule::StrictMajority;
  AlgorithmOrder order = AlgorithmOrder::PoolingRemoval;
  TieBreak tie_break;
  /// After pooling-removal, drop vertices with no directed path to the
  /// predictor.
  bool prune_isolated = true;
};

std::string_view to_string(AggregationRule rule) noexcept;
std::string_view to_string(AlgorithmOrder order) noexcept;
std::string to_string(const TieBreak& tie_break);
/// Inverse of to_string; InvalidArgument on unknown names. Tie-breaks are
/// "lexicographic" or "random:SEED".
AggregationRule parse_rule(std::string_view text);
AlgorithmOrder parse_order(std::string_view text);
TieBreak parse_tie_break(std::string_view text);

/// F(votes). EmptyVotes when `votes` is empty.
bool aggregate_judgments(AggregationRule rule, const std::vector<bool>& votes);

/// Removes protected attributes and, per model, their descendants: every
/// edge touching a removed vertex is deleted from every diagram and the
/// vertex is marked Removed. The predictor is never removed.
std::vector<CausalDiagram> removal(std::span<const CausalDiagram> diagrams,
                                   const FairnessSpec& spec);

constexpr std::size_t kUnreachableDepth = std::numeric_limits<std::size_t>::max();

/// Depth 1 for edges incident to the predictor, depth d for edges first
/// touching a vertex reached at depth d-1 (edge direction ignored), and
/// kUnreachableDepth for edges outside the predictor's component.
std::map<Edge, std::size_t> edge_depth_layers(const CausalDiagram& diagram);

/// What pooling did with one candidate edge.
struct EdgeDecision {
  Edge edge;
  std::size_t depth = 0;       // minimum over the models
  std::size_t rank = 0;        // position within its depth layer
  std::size_t layer_size = 0;  // candidates sharing that depth
  std::size_t votes_for = 0;
  std::size_t voters = 0;
  bool accepted = false;  // by the aggregation rule
  bool inserted = false;  // accepted and kept the pooled graph acyclic
};

/// Judgment aggregation over edges, inserting candidates in ascending
/// depth (ties by `tie_break`) when the rule accepts them and the pooled
/// graph stays acyclic. Edges unreachable from the predictor in every
/// model are never candidates.
CausalDiagram pooling(std::span<const CausalDiagram> diagrams, AggregationRule rule,
                      const TieBreak& tie_break, std::vector<EdgeDecision>* decisions = nullptr);

struct AggregationResult {
  CausalDiagram diagram;
  std::vector<EdgeDecision> decisions;
};

AggregationResult removal_pooling(std::span<const CausalDiagram> diagrams,
                                  const FairnessSpec& spec, const AggregationConfig& config);
AggregationResult pooling_removal(std::span<const CausalDiagram> diagrams,
                                  const FairnessSpec& spec, const AggregationConfig& config);
/// Dispatches on config.order.
AggregationResult aggregate(std::span<const CausalDiagram> diagrams, const FairnessSpec& spec,
                            const AggregationConfig& config);

/// Marks every Retained vertex without a directed path to the predictor as
/// Pruned and drops its edges.
CausalDiagram prune_isolated(const CausalDiagram& diagram);

/// No parent of the predictor lies in A or its descendants, and no member
/// of A is an ancestor of the predictor.
bool satisfies_nondescendant_condition(const CausalDiagram& diagram, const FairnessSpec& spec);

/// `.dag` text: `# key=value` metadata comments, then `vertices` (retained),
/// `exogenous`, `removed`, `pruned` and `predictor` header lines, then one
/// `edge FROM -> TO` per edge, all sorted.
std::string write_dag(const CausalDiagram& diagram,
                      const std::vector<std::pair<std::string, std::string>>& metadata = {});
CausalDiagram read_dag(std::string_view text);

}  // namespace fairpool
