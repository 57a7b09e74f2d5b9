#include "testkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fairpool::testkit {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string data_path(const std::string& name) {
  return std::string(FAIRPOOL_DATA_DIR) + "/" + name;
}

std::string golden_path(const std::string& name) {
  return std::string(FAIRPOOL_GOLDEN_DIR) + "/" + name;
}

ProbabilisticCausalModel corpus_model(const std::string& file) {
  return parse_model(read_text(data_path(file)));
}

std::vector<ProbabilisticCausalModel> corpus_models() {
  return {corpus_model("alice.scm"), corpus_model("bob.scm")};
}

FairnessSpec corpus_spec() {
  const auto models = corpus_models();
  return parse_fairness_spec(read_text(data_path("phd.fair")), models);
}

std::vector<EvidenceRecord> corpus_evidence() {
  const auto models = corpus_models();
  const auto encoding = parse_encoding(read_text(data_path("phd.enc")));
  return parse_evidence(read_text(data_path("applicants.evd")), encoding, models);
}

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

// Mix of short decimals, integers and awkward doubles.
double random_constant(Rng& rng) {
  switch (pick(rng, 4)) {
    case 0: return static_cast<double>(static_cast<int>(pick(rng, 21)) - 10);
    case 1: return std::round(uniform(rng, -10.0, 10.0) * 10.0) / 10.0;
    case 2: return uniform(rng, -1e6, 1e6);
    default: return uniform(rng, 0.0, 1.0) * std::pow(10.0, static_cast<double>(pick(rng, 40)) - 20.0);
  }
}

}  // namespace

Distribution random_distribution(Rng& rng, bool discrete_only) {
  const std::size_t family = pick(rng, discrete_only ? 3 : 5);
  switch (family) {
    case 0: return Distribution::bernoulli(std::round(uniform(rng, 0.05, 0.95) * 100.0) / 100.0);
    case 1: {
      std::vector<double> w(2 + pick(rng, 2));
      double total = 0.0;
      for (auto& x : w) total += (x = 1.0 + static_cast<double>(pick(rng, 9)));
      // Hundredths, with the remainder on the last weight.
      double rest = 1.0;
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        w[i] = std::round(w[i] / total * 100.0) / 100.0;
        rest -= w[i];
      }
      w.back() = rest;
      if (rest <= 0.0) return Distribution::categorical({0.5, 0.5});
      return Distribution::categorical(w);
    }
    case 2: return Distribution::point_mass(static_cast<double>(pick(rng, 3)));
    case 3: return Distribution::poisson(std::round(uniform(rng, 0.5, 8.0) * 10.0) / 10.0);
    default:
      return Distribution::beta(std::round(uniform(rng, 0.5, 5.0) * 10.0) / 10.0,
                                std::round(uniform(rng, 0.5, 5.0) * 10.0) / 10.0);
  }
}

Expression random_expression(Rng& rng, const std::vector<std::string>& names, int depth,
                             bool allow_division) {
  auto leaf = [&]() {
    if (!names.empty() && coin(rng, 0.7)) return Expression::variable(names[pick(rng, names.size())]);
    return Expression::constant(random_constant(rng));
  };
  if (depth <= 0 || coin(rng, 0.3)) return leaf();
  auto comparison = [&]() {
    const auto op = static_cast<CompareOp>(pick(rng, 6));
    return Expression::compare(op, random_expression(rng, names, depth - 1, allow_division),
                               random_expression(rng, names, depth - 1, allow_division));
  };
  switch (pick(rng, 6)) {
    case 0: return comparison();
    case 1:
      return Expression::if_then_else(comparison(),
                                      random_expression(rng, names, depth - 1, allow_division),
                                      random_expression(rng, names, depth - 1, allow_division));
    default: {
      auto op = static_cast<BinaryOp>(pick(rng, allow_division ? 4 : 3));
      auto lhs = random_expression(rng, names, depth - 1, allow_division);
      auto rhs = random_expression(rng, names, depth - 1, allow_division);
      return Expression::binary(op, std::move(lhs), std::move(rhs));
    }
  }
}

ProbabilisticCausalModel random_model(Rng& rng, const ModelOptions& o) {
  std::vector<Variable> variables;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < o.exogenous; ++i) {
    const std::string name = "U" + std::to_string(i);
    variables.push_back(Variable::exogenous(name, random_distribution(rng, o.discrete_only)));
    names.push_back(name);
  }
  for (std::size_t i = 0; i < o.endogenous; ++i) {
    const std::string name = "V" + std::to_string(i);
    variables.push_back(
        Variable::endogenous(name, random_expression(rng, names, o.max_depth, o.allow_division)));
    names.push_back(name);
  }
  variables.push_back(
      Variable::endogenous("Y", random_expression(rng, names, o.max_depth, o.allow_division)));
  // Reverse the declarations half the time so declaration order is not the
  // evaluation order.
  if (coin(rng, 0.5)) std::reverse(variables.begin(), variables.end());
  return ProbabilisticCausalModel::create("random", std::move(variables), "Y");
}

std::vector<CausalDiagram> random_ensemble(Rng& rng, std::size_t experts, std::size_t k,
                                           double density) {
  std::map<std::string, VariableKind> vertices{{"Y", VariableKind::Endogenous}};
  std::vector<std::string> endogenous;
  for (std::size_t i = 1; i <= k; ++i) {
    endogenous.push_back("V" + std::to_string(i));
    vertices["V" + std::to_string(i)] = VariableKind::Endogenous;
    vertices["U" + std::to_string(i)] = VariableKind::Exogenous;
  }
  std::vector<CausalDiagram> out;
  for (std::size_t e = 0; e < experts; ++e) {
    auto order = endogenous;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<Edge> edges;
    for (std::size_t i = 1; i <= k; ++i) {
      edges.insert(Edge{"U" + std::to_string(i), "V" + std::to_string(i)});
    }
    for (std::size_t a = 0; a < order.size(); ++a) {
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        if (coin(rng, density)) edges.insert(Edge{order[a], order[b]});
      }
      if (coin(rng, density)) edges.insert(Edge{order[a], "Y"});
    }
    out.push_back(CausalDiagram::create(vertices, std::move(edges), "Y"));
  }
  return out;
}

FairnessSpec random_spec(Rng& rng, const CausalDiagram& diagram) {
  std::vector<std::string> candidates;
  for (const auto& [name, kind] : diagram.vertices()) {
    if (kind == VariableKind::Endogenous && name != diagram.predictor()) candidates.push_back(name);
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  FairnessSpec spec;
  spec.predictor = diagram.predictor();
  const std::size_t count = 1 + pick(rng, std::min<std::size_t>(2, candidates.size()));
  for (std::size_t i = 0; i < count; ++i) spec.protected_attributes.insert(candidates[i]);
  for (const auto& [name, kind] : diagram.vertices()) {
    if (name != diagram.predictor() && !spec.protected_attributes.count(name)) {
      spec.features.insert(name);
    }
  }
  return spec;
}

bool is_acyclic(const CausalDiagram& diagram) {
  std::set<std::string> names;
  for (const auto& [name, kind] : diagram.vertices()) names.insert(name);
  return !find_cycle(names, diagram.edges()).has_value();
}

}  // namespace fairpool::testkit
