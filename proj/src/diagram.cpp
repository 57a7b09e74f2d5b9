#include "fairpool/diagram.hpp"

#include <algorithm>
#include <deque>

#include "fairpool/error.hpp"

namespace fairpool {

namespace {

using Adjacency = std::map<std::string, std::vector<std::string>>;

Adjacency forward(const std::set<Edge>& edges) {
  Adjacency adj;
  for (const auto& e : edges) adj[e.from].push_back(e.to);
  return adj;
}

Adjacency backward(const std::set<Edge>& edges) {
  Adjacency adj;
  for (const auto& e : edges) adj[e.to].push_back(e.from);
  return adj;
}

std::set<std::string> reach(const Adjacency& adj, const std::set<std::string>& starts) {
  std::set<std::string> seen;
  std::deque<std::string> queue(starts.begin(), starts.end());
  while (!queue.empty()) {
    const std::string v = std::move(queue.front());
    queue.pop_front();
    auto it = adj.find(v);
    if (it == adj.end()) continue;
    for (const auto& w : it->second) {
      if (seen.insert(w).second) queue.push_back(w);
    }
  }
  return seen;
}

std::string join_cycle(const std::vector<std::string>& cycle) {
  std::string out;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (i) out += " -> ";
    out += cycle[i];
  }
  return out;
}

}  // namespace

CausalDiagram CausalDiagram::create(std::map<std::string, VariableKind> vertices,
                                    std::set<Edge> edges, std::string predictor,
                                    std::map<std::string, VertexStatus> status) {
  if (!vertices.count(predictor)) {
    throw Error(ErrorCode::UnknownVertex, "predictor '" + predictor + "' is not a vertex");
  }
  if (vertices.at(predictor) != VariableKind::Endogenous) {
    throw Error(ErrorCode::InvalidArgument, "predictor '" + predictor + "' must be endogenous");
  }
  for (const auto& e : edges) {
    for (const auto* end : {&e.from, &e.to}) {
      if (!vertices.count(*end)) {
        throw Error(ErrorCode::UnknownVertex, "edge endpoint '" + *end + "' is not a vertex");
      }
    }
    if (e.from == e.to) {
      throw Error(ErrorCode::InvalidArgument, "self-loop on '" + e.from + "'");
    }
    if (vertices.at(e.to) != VariableKind::Endogenous) {
      throw Error(ErrorCode::InvalidArgument,
                  "edge " + e.from + " -> " + e.to + " points into an exogenous vertex");
    }
  }
  std::set<std::string> names;
  for (const auto& [name, kind] : vertices) names.insert(name);
  if (auto cycle = find_cycle(names, edges)) {
    throw Error(ErrorCode::CyclicModel, "cycle " + join_cycle(*cycle));
  }
  for (auto it = status.begin(); it != status.end();) {
    if (!vertices.count(it->first)) {
      throw Error(ErrorCode::UnknownVertex, "status for unknown vertex '" + it->first + "'");
    }
    it = it->second == VertexStatus::Retained ? status.erase(it) : std::next(it);
  }
  CausalDiagram d;
  d.vertices_ = std::move(vertices);
  d.edges_ = std::move(edges);
  d.predictor_ = std::move(predictor);
  d.status_ = std::move(status);
  return d;
}

VertexStatus CausalDiagram::status(const std::string& vertex) const {
  auto it = status_.find(vertex);
  return it == status_.end() ? VertexStatus::Retained : it->second;
}

std::set<std::string> CausalDiagram::vertices_with_status(VertexStatus wanted) const {
  std::set<std::string> out;
  for (const auto& [name, kind] : vertices_) {
    if (status(name) == wanted) out.insert(name);
  }
  return out;
}

std::set<std::string> CausalDiagram::parents(const std::string& vertex) const {
  std::set<std::string> out;
  for (const auto& e : edges_) {
    if (e.to == vertex) out.insert(e.from);
  }
  return out;
}

std::set<std::string> CausalDiagram::children(const std::string& vertex) const {
  std::set<std::string> out;
  for (const auto& e : edges_) {
    if (e.from == vertex) out.insert(e.to);
  }
  return out;
}

std::optional<std::vector<std::string>> find_cycle(const std::set<std::string>& vertices,
                                                   const std::set<Edge>& edges) {
  const Adjacency adj = forward(edges);
  enum class Mark { White, Grey, Black };
  std::map<std::string, Mark> mark;
  for (const auto& v : vertices) mark[v] = Mark::White;

  // Iterative DFS; the explicit stack doubles as the current path.
  for (const auto& root : vertices) {
    if (mark[root] != Mark::White) continue;
    std::vector<std::pair<std::string, std::size_t>> stack{{root, 0}};
    mark[root] = Mark::Grey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      auto it = adj.find(v);
      if (it == adj.end() || next >= it->second.size()) {
        mark[v] = Mark::Black;
        stack.pop_back();
        continue;
      }
      const std::string w = it->second[next++];
      if (mark[w] == Mark::Grey) {
        std::vector<std::string> cycle;
        auto start = std::find_if(stack.begin(), stack.end(),
                                  [&](const auto& frame) { return frame.first == w; });
        for (auto f = start; f != stack.end(); ++f) cycle.push_back(f->first);
        cycle.push_back(w);
        return cycle;
      }
      if (mark[w] == Mark::White) {
        mark[w] = Mark::Grey;
        stack.emplace_back(w, 0);
      }
    }
  }
  return std::nullopt;
}

std::set<std::string> descendants(const CausalDiagram& diagram, const std::set<std::string>& roots) {
  for (const auto& r : roots) {
    if (!diagram.contains(r)) throw Error(ErrorCode::UnknownVertex, "unknown vertex '" + r + "'");
  }
  return reach(forward(diagram.edges()), roots);
}

std::set<std::string> ancestors(const CausalDiagram& diagram, const std::set<std::string>& targets) {
  for (const auto& t : targets) {
    if (!diagram.contains(t)) throw Error(ErrorCode::UnknownVertex, "unknown vertex '" + t + "'");
  }
  return reach(backward(diagram.edges()), targets);
}

bool reachable(const std::set<Edge>& edges, const std::string& from, const std::string& to) {
  if (from == to) return true;
  return reach(forward(edges), {from}).count(to) != 0;
}

}  // namespace fairpool
