#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fairpool {

enum class VariableKind { Exogenous, Endogenous };

struct Edge {
  std::string from;
  std::string to;

  friend auto operator<=>(const Edge&, const Edge&) = default;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Retained vertices are part of the fair feature set; Removed ones were
/// protected attributes or their descendants; Pruned ones lost every
/// directed path to the predictor.
enum class VertexStatus { Retained, Removed, Pruned };

/// A DAG over variable names with a designated predictor vertex. Vertex
/// statuses annotate diagrams produced by the removal step; a diagram built
/// from a model has every vertex Retained.
class CausalDiagram {
 public:
  /// Throws UnknownVertex for dangling endpoints or predictor,
  /// InvalidArgument for edges into exogenous vertices or self-loops, and
  /// CyclicModel (naming the cycle) if the edges contain a cycle.
  static CausalDiagram create(std::map<std::string, VariableKind> vertices, std::set<Edge> edges,
                              std::string predictor,
                              std::map<std::string, VertexStatus> status = {});

  const std::map<std::string, VariableKind>& vertices() const noexcept { return vertices_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  const std::string& predictor() const noexcept { return predictor_; }

  bool contains(const std::string& vertex) const { return vertices_.count(vertex) != 0; }
  bool has_edge(const Edge& edge) const { return edges_.count(edge) != 0; }
  VertexStatus status(const std::string& vertex) const;
  std::set<std::string> vertices_with_status(VertexStatus status) const;

  std::set<std::string> parents(const std::string& vertex) const;
  std::set<std::string> children(const std::string& vertex) const;

  friend bool operator==(const CausalDiagram&, const CausalDiagram&) = default;

 private:
  std::map<std::string, VariableKind> vertices_;
  std::set<Edge> edges_;
  std::string predictor_;
  std::map<std::string, VertexStatus> status_;  // only non-Retained entries
};

/// Some directed cycle as a closed vertex walk (first == last), or nullopt.
std::optional<std::vector<std::string>> find_cycle(const std::set<std::string>& vertices,
                                                   const std::set<Edge>& edges);

/// Vertices reachable from any root by at least one edge. UnknownVertex if a
/// root is not in the diagram.
std::set<std::string> descendants(const CausalDiagram& diagram, const std::set<std::string>& roots);

/// Vertices from which some target is reachable by at least one edge.
std::set<std::string> ancestors(const CausalDiagram& diagram, const std::set<std::string>& targets);

/// True if `to` is reachable from `from` (including from == to).
bool reachable(const std::set<Edge>& edges, const std::string& from, const std::string& to);

}  // namespace fairpool
