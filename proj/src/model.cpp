#include "fairpool/model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

namespace fairpool {

Variable Variable::exogenous(std::string name, Distribution distribution) {
  return Variable{std::move(name), VariableKind::Exogenous, std::move(distribution), std::nullopt};
}

Variable Variable::endogenous(std::string name, Expression equation) {
  return Variable{std::move(name), VariableKind::Endogenous, std::nullopt, std::move(equation)};
}

namespace {

// Index-resolved equation, flattened so children precede parents.
struct Program {
  enum class Kind : std::uint8_t { Constant, Load, Binary, Compare, Select };
  struct Node {
    Kind kind;
    std::uint8_t op = 0;
    double value = 0.0;
    std::uint32_t a = 0, b = 0, c = 0;  // variable index or child node indices
  };
  std::vector<Node> nodes;
  std::uint32_t root = 0;
};

std::uint32_t compile_node(const Expression& e,
                           const std::unordered_map<std::string, std::size_t>& index,
                           Program& out) {
  using Kind = Program::Kind;
  Program::Node node{};
  const auto& v = e.node().value;
  if (const auto* c = std::get_if<ConstantExpr>(&v)) {
    node.kind = Kind::Constant;
    node.value = c->value;
  } else if (const auto* r = std::get_if<VarRefExpr>(&v)) {
    node.kind = Kind::Load;
    node.a = static_cast<std::uint32_t>(index.at(r->name));
  } else if (const auto* b = std::get_if<BinaryExpr>(&v)) {
    node.kind = Kind::Binary;
    node.op = static_cast<std::uint8_t>(b->op);
    node.a = compile_node(b->lhs, index, out);
    node.b = compile_node(b->rhs, index, out);
  } else if (const auto* cmp = std::get_if<ComparisonExpr>(&v)) {
    node.kind = Kind::Compare;
    node.op = static_cast<std::uint8_t>(cmp->op);
    node.a = compile_node(cmp->lhs, index, out);
    node.b = compile_node(cmp->rhs, index, out);
  } else {
    const auto& ite = std::get<IfThenElseExpr>(v);
    node.kind = Kind::Select;
    node.a = compile_node(ite.condition, index, out);
    node.b = compile_node(ite.then_branch, index, out);
    node.c = compile_node(ite.else_branch, index, out);
  }
  out.nodes.push_back(node);
  return static_cast<std::uint32_t>(out.nodes.size() - 1);
}

double run(const Program& p, std::uint32_t at, std::span<const double> values,
           const std::string& owner) {
  using Kind = Program::Kind;
  const auto& n = p.nodes[at];
  switch (n.kind) {
    case Kind::Constant: return n.value;
    case Kind::Load: return values[n.a];
    case Kind::Binary: {
      const double x = run(p, n.a, values, owner);
      const double y = run(p, n.b, values, owner);
      switch (static_cast<BinaryOp>(n.op)) {
        case BinaryOp::Add: return x + y;
        case BinaryOp::Sub: return x - y;
        case BinaryOp::Mul: return x * y;
        case BinaryOp::Div:
          if (y == 0.0) {
            throw Error(ErrorCode::DivisionByZero, "division by zero evaluating '" + owner + "'");
          }
          return x / y;
      }
      return 0.0;
    }
    case Kind::Compare: {
      const double x = run(p, n.a, values, owner);
      const double y = run(p, n.b, values, owner);
      bool r = false;
      switch (static_cast<CompareOp>(n.op)) {
        case CompareOp::Eq: r = x == y; break;
        case CompareOp::Ne: r = x != y; break;
        case CompareOp::Lt: r = x < y; break;
        case CompareOp::Le: r = x <= y; break;
        case CompareOp::Gt: r = x > y; break;
        case CompareOp::Ge: r = x >= y; break;
      }
      return r ? 1.0 : 0.0;
    }
    case Kind::Select:
      // Only the taken branch is evaluated.
      return run(p, n.a, values, owner) != 0.0 ? run(p, n.b, values, owner)
                                               : run(p, n.c, values, owner);
  }
  return 0.0;
}

bool constants_finite(const Expression& e) {
  const auto& v = e.node().value;
  if (const auto* c = std::get_if<ConstantExpr>(&v)) return std::isfinite(c->value);
  if (const auto* b = std::get_if<BinaryExpr>(&v)) {
    return constants_finite(b->lhs) && constants_finite(b->rhs);
  }
  if (const auto* c = std::get_if<ComparisonExpr>(&v)) {
    return constants_finite(c->lhs) && constants_finite(c->rhs);
  }
  if (const auto* i = std::get_if<IfThenElseExpr>(&v)) {
    return constants_finite(i->condition) && constants_finite(i->then_branch) &&
           constants_finite(i->else_branch);
  }
  return true;
}

std::uint32_t stream_id(const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return static_cast<std::uint32_t>(mix64(h));
}

}  // namespace

struct ProbabilisticCausalModel::Impl {
  std::string label;
  std::vector<Variable> variables;
  std::string predictor;
  std::size_t predictor_index = 0;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> order;
  std::vector<std::size_t> exogenous;
  std::vector<std::uint32_t> streams;  // per variable, exogenous only
  std::vector<Program> programs;       // per variable, endogenous only
  CausalDiagram diagram;
};

ProbabilisticCausalModel ProbabilisticCausalModel::create(std::string label,
                                                          std::vector<Variable> variables,
                                                          std::string predictor,
                                                          std::span<const SourceLocation> locations) {
  auto where = [&](std::size_t i) -> std::optional<SourceLocation> {
    if (i < locations.size()) return locations[i];
    return std::nullopt;
  };

  auto impl = std::make_shared<Impl>();
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const Variable& v = variables[i];
    if (v.name.empty()) throw Error(ErrorCode::InvalidArgument, "empty variable name", where(i));
    if (!impl->index.emplace(v.name, i).second) {
      throw Error(ErrorCode::DuplicateDeclaration, "'" + v.name + "' is declared twice", where(i));
    }
    const bool exo = v.kind == VariableKind::Exogenous;
    if (exo != v.distribution.has_value() || exo == v.equation.has_value()) {
      throw Error(ErrorCode::InvalidArgument,
                  "'" + v.name + "' needs exactly a distribution (exogenous) or an equation "
                                 "(endogenous)",
                  where(i));
    }
  }

  auto pit = impl->index.find(predictor);
  if (pit == impl->index.end()) {
    throw Error(ErrorCode::UndeclaredVariable, "predictor '" + predictor + "' is not declared");
  }
  if (variables[pit->second].kind != VariableKind::Endogenous) {
    throw Error(ErrorCode::InvalidArgument, "predictor '" + predictor + "' must be endogenous",
                where(pit->second));
  }

  std::map<std::string, VariableKind> vertices;
  std::set<Edge> edges;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const Variable& v = variables[i];
    vertices.emplace(v.name, v.kind);
    if (!v.equation) continue;
    if (!constants_finite(*v.equation)) {
      throw Error(ErrorCode::InvalidParameter, "non-finite constant in '" + v.name + "'", where(i));
    }
    for (const auto& ref : v.equation->references()) {
      if (!impl->index.count(ref)) {
        throw Error(ErrorCode::UndeclaredVariable,
                    "'" + v.name + "' references undeclared variable '" + ref + "'", where(i));
      }
      if (ref == v.name) {
        throw Error(ErrorCode::CyclicModel, "cycle " + ref + " -> " + ref, where(i));
      }
      if (ref == predictor) {
        throw Error(ErrorCode::InvalidArgument,
                    "'" + v.name + "' references the predictor '" + predictor + "'", where(i));
      }
      edges.insert(Edge{ref, v.name});
    }
  }

  try {
    impl->diagram = CausalDiagram::create(vertices, edges, predictor);
  } catch (const Error& e) {
    std::optional<SourceLocation> loc;
    if (e.code() == ErrorCode::CyclicModel) {
      // Report at the earliest-declared variable on the cycle.
      std::set<std::string> names;
      for (const auto& [n, k] : vertices) names.insert(n);
      auto cycle = find_cycle(names, edges);
      std::size_t first = variables.size();
      for (const auto& n : *cycle) first = std::min(first, impl->index.at(n));
      loc = where(first);
    }
    throw Error(e.code(), e.detail(), loc);
  }

  // Kahn's algorithm; ties resolved by declaration order.
  std::vector<std::size_t> indegree(variables.size(), 0);
  std::vector<std::vector<std::size_t>> children(variables.size());
  for (const auto& e : edges) {
    const auto from = impl->index.at(e.from);
    const auto to = impl->index.at(e.to);
    children[from].push_back(to);
    ++indegree[to];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  while (!ready.empty()) {
    const auto i = ready.top();
    ready.pop();
    if (variables[i].kind == VariableKind::Endogenous) impl->order.push_back(i);
    for (auto c : children[i]) {
      if (--indegree[c] == 0) ready.push(c);
    }
  }

  impl->programs.resize(variables.size());
  impl->streams.resize(variables.size(), 0);
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].kind == VariableKind::Exogenous) {
      impl->exogenous.push_back(i);
      impl->streams[i] = stream_id(variables[i].name);
    } else {
      Program& p = impl->programs[i];
      p.root = compile_node(*variables[i].equation, impl->index, p);
    }
  }

  impl->label = std::move(label);
  impl->predictor_index = pit->second;
  impl->predictor = std::move(predictor);
  impl->variables = std::move(variables);
  return ProbabilisticCausalModel(std::move(impl));
}

const std::string& ProbabilisticCausalModel::label() const noexcept { return impl_->label; }
const std::vector<Variable>& ProbabilisticCausalModel::variables() const noexcept {
  return impl_->variables;
}
const std::string& ProbabilisticCausalModel::predictor() const noexcept {
  return impl_->predictor;
}
std::size_t ProbabilisticCausalModel::predictor_index() const noexcept {
  return impl_->predictor_index;
}
const CausalDiagram& ProbabilisticCausalModel::diagram() const noexcept { return impl_->diagram; }
const std::vector<std::size_t>& ProbabilisticCausalModel::evaluation_order() const noexcept {
  return impl_->order;
}
const std::vector<std::size_t>& ProbabilisticCausalModel::exogenous_indices() const noexcept {
  return impl_->exogenous;
}

std::optional<std::size_t> ProbabilisticCausalModel::index_of(std::string_view name) const {
  auto it = impl_->index.find(std::string(name));
  if (it == impl_->index.end()) return std::nullopt;
  return it->second;
}

const Variable& ProbabilisticCausalModel::variable(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw Error(ErrorCode::UnknownVariable, "unknown variable '" + std::string(name) + "'");
  return impl_->variables[*i];
}

void ProbabilisticCausalModel::sample_exogenous(std::span<double> values, std::uint64_t seed,
                                                std::uint64_t index) const {
  for (auto i : impl_->exogenous) {
    CounterStream stream(seed, index, impl_->streams[i]);
    values[i] = impl_->variables[i].distribution->sample(stream);
  }
}

void ProbabilisticCausalModel::propagate(std::span<double> values,
                                         std::span<const char> clamped) const {
  for (auto i : impl_->order) {
    if (!clamped.empty() && clamped[i]) continue;
    const Program& p = impl_->programs[i];
    values[i] = run(p, p.root, values, impl_->variables[i].name);
  }
}

bool operator==(const ProbabilisticCausalModel& a, const ProbabilisticCausalModel& b) {
  if (a.impl_ == b.impl_) return true;
  return a.label() == b.label() && a.predictor() == b.predictor() &&
         a.variables() == b.variables();
}

CausalDiagram build_diagram(const ProbabilisticCausalModel& model) { return model.diagram(); }

Assignment evaluate(const ProbabilisticCausalModel& model, const Context& context) {
  std::vector<double> values(model.size(), 0.0);
  for (const auto& [name, value] : context) {
    auto i = model.index_of(name);
    if (!i || model.variables()[*i].kind != VariableKind::Exogenous) {
      throw Error(ErrorCode::UnknownVariable, "context names '" + name +
                                                  "', which is not an exogenous variable");
    }
    if (!model.variables()[*i].distribution->admits(value)) {
      throw Error(ErrorCode::InvalidParameter,
                  "context value for '" + name + "' is outside its distribution's support");
    }
    values[*i] = value;
  }
  for (auto i : model.exogenous_indices()) {
    const auto& name = model.variables()[i].name;
    if (!context.count(name)) {
      throw Error(ErrorCode::IncompleteContext, "context has no value for '" + name + "'");
    }
  }
  model.propagate(values);
  Assignment out;
  for (auto i : model.evaluation_order()) out.emplace(model.variables()[i].name, values[i]);
  return out;
}

ProbabilisticCausalModel intervene(const ProbabilisticCausalModel& model,
                                   const Intervention& intervention) {
  if (intervention.empty()) {
    throw Error(ErrorCode::InvalidArgument, "an intervention needs at least one target");
  }
  std::vector<Variable> variables = model.variables();
  for (const auto& [name, value] : intervention) {
    auto i = model.index_of(name);
    if (!i) {
      throw Error(ErrorCode::InterventionOnUndeclared, "'" + name + "' is not declared");
    }
    if (variables[*i].kind != VariableKind::Endogenous) {
      throw Error(ErrorCode::InterventionOnExogenous, "'" + name + "' is exogenous");
    }
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::InvalidParameter, "intervention value for '" + name + "' is not finite");
    }
    variables[*i].equation = Expression::constant(value);
  }
  return ProbabilisticCausalModel::create(model.label(), std::move(variables), model.predictor());
}

double counterfactual(const ProbabilisticCausalModel& model, const Context& context,
                      const Intervention& intervention, const std::string& target) {
  const Variable& t = model.variable(target);
  if (t.kind != VariableKind::Endogenous) {
    throw Error(ErrorCode::InvalidArgument, "counterfactual target '" + target +
                                                "' must be endogenous");
  }
  return evaluate(intervene(model, intervention), context).at(target);
}

Context sample_context(const ProbabilisticCausalModel& model, std::uint64_t seed,
                       std::uint64_t index) {
  std::vector<double> values(model.size(), 0.0);
  model.sample_exogenous(values, seed, index);
  Context out;
  for (auto i : model.exogenous_indices()) out.emplace(model.variables()[i].name, values[i]);
  return out;
}

}  // namespace fairpool
