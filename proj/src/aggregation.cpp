#include "fairpool/aggregation.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <sstream>

#include "fairpool/error.hpp"
#include "fairpool/rng.hpp"

namespace fairpool {

std::string_view to_string(AggregationRule rule) noexcept {
  switch (rule) {
    case AggregationRule::StrictMajority: return "strict-majority";
    case AggregationRule::Intersection: return "intersection";
    case AggregationRule::Union: return "union";
  }
  return "?";
}

std::string_view to_string(AlgorithmOrder order) noexcept {
  switch (order) {
    case AlgorithmOrder::RemovalPooling: return "removal-pooling";
    case AlgorithmOrder::PoolingRemoval: return "pooling-removal";
  }
  return "?";
}

std::string to_string(const TieBreak& tie_break) {
  if (tie_break.kind == TieBreak::Kind::Lexicographic) return "lexicographic";
  return "random:" + std::to_string(tie_break.seed);
}

AggregationRule parse_rule(std::string_view text) {
  for (auto r : {AggregationRule::StrictMajority, AggregationRule::Intersection,
                 AggregationRule::Union}) {
    if (text == to_string(r)) return r;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown aggregation rule '" + std::string(text) + "'");
}

AlgorithmOrder parse_order(std::string_view text) {
  for (auto o : {AlgorithmOrder::RemovalPooling, AlgorithmOrder::PoolingRemoval}) {
    if (text == to_string(o)) return o;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm order '" + std::string(text) + "'");
}

TieBreak parse_tie_break(std::string_view text) {
  if (text == "lexicographic") return TieBreak::lexicographic();
  constexpr std::string_view prefix = "random:";
  if (text.substr(0, prefix.size()) == prefix) {
    const auto digits = text.substr(prefix.size());
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      return TieBreak::seeded(seed);
    }
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown tie-break '" + std::string(text) + "' (lexicographic | random:SEED)");
}

bool aggregate_judgments(AggregationRule rule, const std::vector<bool>& votes) {
  if (votes.empty()) throw Error(ErrorCode::EmptyVotes, "no votes to aggregate");
  const auto yes = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true));
  switch (rule) {
    case AggregationRule::StrictMajority: return 2 * yes > votes.size();
    case AggregationRule::Intersection: return yes == votes.size();
    case AggregationRule::Union: return yes > 0;
  }
  return false;
}

namespace {

void require_shared_vertices(std::span<const CausalDiagram> diagrams) {
  if (diagrams.empty()) throw Error(ErrorCode::EmptyInput, "no diagrams given");
  for (const auto& d : diagrams.subspan(1)) {
    if (d.vertices() != diagrams[0].vertices() || d.predictor() != diagrams[0].predictor()) {
      throw Error(ErrorCode::MismatchedVertexSets,
                  "diagrams must share one vertex set and predictor");
    }
  }
}

std::map<std::string, VertexStatus> merged_status(std::span<const CausalDiagram> diagrams) {
  std::map<std::string, VertexStatus> status;
  for (const auto& d : diagrams) {
    for (const auto& [name, kind] : d.vertices()) {
      const auto s = d.status(name);
      if (s == VertexStatus::Removed) {
        status[name] = VertexStatus::Removed;
      } else if (s == VertexStatus::Pruned && !status.count(name)) {
        status[name] = VertexStatus::Pruned;
      }
    }
  }
  return status;
}

std::uint64_t edge_key(const Edge& e, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
  };
  feed(e.from);
  feed("\x1f");
  feed(e.to);
  return mix64(h ^ mix64(seed));
}

}  // namespace

std::vector<CausalDiagram> removal(std::span<const CausalDiagram> diagrams,
                                   const FairnessSpec& spec) {
  require_shared_vertices(diagrams);
  const std::string& predictor = diagrams[0].predictor();

  std::set<std::string> removed;
  for (const auto& d : diagrams) {
    for (const auto& a : spec.protected_attributes) {
      if (!d.contains(a)) {
        throw Error(ErrorCode::UnknownVertex, "protected attribute '" + a + "' is not a vertex");
      }
      removed.insert(a);
    }
    for (const auto& v : descendants(d, spec.protected_attributes)) removed.insert(v);
  }
  removed.erase(predictor);

  std::vector<CausalDiagram> out;
  out.reserve(diagrams.size());
  for (const auto& d : diagrams) {
    std::set<Edge> kept;
    for (const auto& e : d.edges()) {
      if (!removed.count(e.from) && !removed.count(e.to)) kept.insert(e);
    }
    std::map<std::string, VertexStatus> status;
    for (const auto& [name, kind] : d.vertices()) status[name] = d.status(name);
    for (const auto& v : removed) status[v] = VertexStatus::Removed;
    out.push_back(CausalDiagram::create(d.vertices(), std::move(kept), predictor, std::move(status)));
  }
  return out;
}

std::map<Edge, std::size_t> edge_depth_layers(const CausalDiagram& diagram) {
  std::map<std::string, std::vector<std::string>> neighbours;
  for (const auto& e : diagram.edges()) {
    neighbours[e.from].push_back(e.to);
    neighbours[e.to].push_back(e.from);
  }
  // Undirected BFS distance from the predictor.
  std::map<std::string, std::size_t> distance{{diagram.predictor(), 0}};
  std::deque<std::string> queue{diagram.predictor()};
  while (!queue.empty()) {
    const std::string v = queue.front();
    queue.pop_front();
    for (const auto& w : neighbours[v]) {
      if (distance.emplace(w, distance[v] + 1).second) queue.push_back(w);
    }
  }
  std::map<Edge, std::size_t> depth;
  for (const auto& e : diagram.edges()) {
    auto a = distance.find(e.from);
    auto b = distance.find(e.to);
    if (a == distance.end() && b == distance.end()) {
      depth[e] = kUnreachableDepth;
    } else {
      const std::size_t da = a == distance.end() ? kUnreachableDepth : a->second;
      const std::size_t db = b == distance.end() ? kUnreachableDepth : b->second;
      depth[e] = std::min(da, db) + 1;
    }
  }
  return depth;
}

CausalDiagram pooling(std::span<const CausalDiagram> diagrams, AggregationRule rule,
                      const TieBreak& tie_break, std::vector<EdgeDecision>* decisions) {
  require_shared_vertices(diagrams);

  std::map<Edge, std::size_t> candidates;
  for (const auto& d : diagrams) {
    for (const auto& [edge, depth] : edge_depth_layers(d)) {
      if (depth == kUnreachableDepth) continue;
      auto [it, fresh] = candidates.emplace(edge, depth);
      if (!fresh) it->second = std::min(it->second, depth);
    }
  }

  struct Candidate {
    Edge edge;
    std::size_t depth;
    std::uint64_t key;
  };
  std::vector<Candidate> ordered;
  for (const auto& [edge, depth] : candidates) {
    const std::uint64_t key =
        tie_break.kind == TieBreak::Kind::SeededRandom ? edge_key(edge, tie_break.seed) : 0;
    ordered.push_back(Candidate{edge, depth, key});
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const Candidate& a, const Candidate& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.key != b.key) return a.key < b.key;
    return a.edge < b.edge;
  });

  std::set<Edge> pooled;
  std::vector<EdgeDecision> log;
  std::size_t layer_start = 0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const auto& c = ordered[i];
    if (i > 0 && ordered[i - 1].depth != c.depth) layer_start = i;

    std::vector<bool> votes;
    votes.reserve(diagrams.size());
    for (const auto& d : diagrams) votes.push_back(d.has_edge(c.edge));

    EdgeDecision decision;
    decision.edge = c.edge;
    decision.depth = c.depth;
    decision.rank = i - layer_start;
    decision.voters = votes.size();
    decision.votes_for = static_cast<std::size_t>(std::count(votes.begin(), votes.end(), true));
    decision.accepted = aggregate_judgments(rule, votes);
    // Inserting from -> to closes a cycle iff `to` already reaches `from`.
    if (decision.accepted && !reachable(pooled, c.edge.to, c.edge.from)) {
      pooled.insert(c.edge);
      decision.inserted = true;
    }
    log.push_back(std::move(decision));
  }
  for (auto& d : log) {
    d.layer_size = static_cast<std::size_t>(std::count_if(
        log.begin(), log.end(), [&](const EdgeDecision& o) { return o.depth == d.depth; }));
  }
  if (decisions) *decisions = std::move(log);

  return CausalDiagram::create(diagrams[0].vertices(), std::move(pooled),
                               diagrams[0].predictor(), merged_status(diagrams));
}

CausalDiagram prune_isolated(const CausalDiagram& diagram) {
  const auto reaches_predictor = ancestors(diagram, {diagram.predictor()});
  std::map<std::string, VertexStatus> status;
  std::set<std::string> dropped;
  for (const auto& [name, kind] : diagram.vertices()) {
    auto s = diagram.status(name);
    if (s == VertexStatus::Retained && name != diagram.predictor() &&
        !reaches_predictor.count(name)) {
      s = VertexStatus::Pruned;
      dropped.insert(name);
    }
    status[name] = s;
  }
  std::set<Edge> kept;
  for (const auto& e : diagram.edges()) {
    if (!dropped.count(e.from) && !dropped.count(e.to)) kept.insert(e);
  }
  return CausalDiagram::create(diagram.vertices(), std::move(kept), diagram.predictor(),
                               std::move(status));
}

bool satisfies_nondescendant_condition(const CausalDiagram& diagram, const FairnessSpec& spec) {
  std::set<std::string> tainted;
  for (const auto& a : spec.protected_attributes) {
    if (diagram.contains(a)) tainted.insert(a);
  }
  const auto below = descendants(diagram, tainted);
  tainted.insert(below.begin(), below.end());
  for (const auto& p : diagram.parents(diagram.predictor())) {
    if (tainted.count(p)) return false;
  }
  const auto above = ancestors(diagram, {diagram.predictor()});
  for (const auto& a : spec.protected_attributes) {
    if (above.count(a)) return false;
  }
  return true;
}

namespace {

void check_fair(const CausalDiagram& diagram, const FairnessSpec& spec) {
  if (!satisfies_nondescendant_condition(diagram, spec)) {
    throw std::logic_error("aggregated diagram violates the non-descendant condition");
  }
}

}  // namespace

AggregationResult removal_pooling(std::span<const CausalDiagram> diagrams,
                                  const FairnessSpec& spec, const AggregationConfig& config) {
  const auto fair = removal(diagrams, spec);
  std::vector<EdgeDecision> decisions;
  CausalDiagram pooled = pooling(fair, config.rule, config.tie_break, &decisions);
  check_fair(pooled, spec);
  return AggregationResult{std::move(pooled), std::move(decisions)};
}

AggregationResult pooling_removal(std::span<const CausalDiagram> diagrams,
                                  const FairnessSpec& spec, const AggregationConfig& config) {
  std::vector<EdgeDecision> decisions;
  const CausalDiagram pooled = pooling(diagrams, config.rule, config.tie_break, &decisions);
  CausalDiagram fair = removal(std::span(&pooled, 1), spec).front();
  if (config.prune_isolated) fair = prune_isolated(fair);
  check_fair(fair, spec);
  return AggregationResult{std::move(fair), std::move(decisions)};
}

AggregationResult aggregate(std::span<const CausalDiagram> diagrams, const FairnessSpec& spec,
                            const AggregationConfig& config) {
  return config.order == AlgorithmOrder::RemovalPooling
             ? removal_pooling(diagrams, spec, config)
             : pooling_removal(diagrams, spec, config);
}

std::string write_dag(const CausalDiagram& diagram,
                      const std::vector<std::pair<std::string, std::string>>& metadata) {
  std::ostringstream out;
  for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
  auto line = [&](std::string_view head, const std::set<std::string>& names) {
    out << head;
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  };
  std::set<std::string> exogenous;
  for (const auto& [name, kind] : diagram.vertices()) {
    if (kind == VariableKind::Exogenous) exogenous.insert(name);
  }
  line("vertices", diagram.vertices_with_status(VertexStatus::Retained));
  line("exogenous", exogenous);
  line("removed", diagram.vertices_with_status(VertexStatus::Removed));
  line("pruned", diagram.vertices_with_status(VertexStatus::Pruned));
  out << "predictor " << diagram.predictor() << '\n';
  for (const auto& e : diagram.edges()) out << "edge " << e.from << " -> " << e.to << '\n';
  return out.str();
}

CausalDiagram read_dag(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  std::set<std::string> retained, exogenous, removed, pruned;
  std::set<Edge> edges;
  std::string predictor;
  std::set<std::string> seen_headers;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::istringstream words(raw);
    std::string head;
    if (!(words >> head)) continue;
    const SourceLocation at{line_no, 1};
    if (head == "edge") {
      std::string from, arrow, to, extra;
      if (!(words >> from >> arrow >> to) || arrow != "->" || (words >> extra)) {
        throw Error(ErrorCode::SyntaxError, "expected 'edge FROM -> TO'", at);
      }
      edges.insert(Edge{from, to});
      continue;
    }
    if (!seen_headers.insert(head).second) {
      throw Error(ErrorCode::DuplicateDeclaration, "header '" + head + "' repeated", at);
    }
    std::set<std::string>* target = nullptr;
    if (head == "vertices") target = &retained;
    else if (head == "exogenous") target = &exogenous;
    else if (head == "removed") target = &removed;
    else if (head == "pruned") target = &pruned;
    else if (head == "predictor") {
      if (!(words >> predictor)) throw Error(ErrorCode::SyntaxError, "missing predictor", at);
      continue;
    } else {
      throw Error(ErrorCode::SyntaxError, "unknown line '" + head + "'", at);
    }
    for (std::string name; words >> name;) target->insert(name);
  }
  if (predictor.empty()) throw Error(ErrorCode::SyntaxError, "missing 'predictor' line");

  std::map<std::string, VariableKind> vertices;
  std::map<std::string, VertexStatus> status;
  auto add = [&](const std::set<std::string>& names, VertexStatus s) {
    for (const auto& n : names) {
      if (vertices.count(n)) {
        throw Error(ErrorCode::DuplicateDeclaration, "vertex '" + n + "' listed twice");
      }
      vertices[n] = exogenous.count(n) ? VariableKind::Exogenous : VariableKind::Endogenous;
      status[n] = s;
    }
  };
  add(retained, VertexStatus::Retained);
  add(removed, VertexStatus::Removed);
  add(pruned, VertexStatus::Pruned);
  for (const auto& n : exogenous) {
    if (!vertices.count(n)) throw Error(ErrorCode::UnknownVertex, "exogenous '" + n + "' unlisted");
  }
  return CausalDiagram::create(std::move(vertices), std::move(edges), predictor, std::move(status));
}

}  // namespace fairpool
