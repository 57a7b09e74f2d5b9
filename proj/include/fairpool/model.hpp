#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairpool/diagram.hpp"
#include "fairpool/distribution.hpp"
#include "fairpool/error.hpp"
#include "fairpool/expression.hpp"

namespace fairpool {

/// Complete assignment of the exogenous variables.
using Context = std::map<std::string, double>;
/// do(X = x) for each entry; targets must be endogenous.
using Intervention = std::map<std::string, double>;
/// Values keyed by variable name.
using Assignment = std::map<std::string, double>;

struct Variable {
  std::string name;
  VariableKind kind;
  std::optional<Distribution> distribution;  // exogenous only
  std::optional<Expression> equation;        // endogenous only

  static Variable exogenous(std::string name, Distribution distribution);
  static Variable endogenous(std::string name, Expression equation);

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// M = (U, V, F, P(U)) plus a designated predictor. Immutable; copies share
/// state and are safe to use from several threads.
class ProbabilisticCausalModel {
 public:
  /// Validates names, references, parameters, the predictor and acyclicity.
  /// `locations`, when given, runs parallel to `variables` and is attached to
  /// the resulting error.
  static ProbabilisticCausalModel create(std::string label, std::vector<Variable> variables,
                                         std::string predictor,
                                         std::span<const SourceLocation> locations = {});

  const std::string& label() const noexcept;
  /// Declaration order.
  const std::vector<Variable>& variables() const noexcept;
  std::size_t size() const noexcept { return variables().size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const Variable& variable(std::string_view name) const;  // UnknownVariable
  const std::string& predictor() const noexcept;
  std::size_t predictor_index() const noexcept;

  const CausalDiagram& diagram() const noexcept;
  /// Endogenous variable indices in a topological order.
  const std::vector<std::size_t>& evaluation_order() const noexcept;
  const std::vector<std::size_t>& exogenous_indices() const noexcept;

  /// Fills the exogenous slots of `values` (indexed like variables()) with
  /// the draw for sample `index` under `seed`.
  void sample_exogenous(std::span<double> values, std::uint64_t seed, std::uint64_t index) const;

  /// Computes every endogenous slot of `values` from its equation, in
  /// topological order, reading exogenous slots as given. Slots flagged in
  /// `clamped` (same indexing, may be empty) keep their current value.
  void propagate(std::span<double> values, std::span<const char> clamped = {}) const;

  friend bool operator==(const ProbabilisticCausalModel& a, const ProbabilisticCausalModel& b);

 private:
  struct Impl;
  explicit ProbabilisticCausalModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

CausalDiagram build_diagram(const ProbabilisticCausalModel& model);

/// Values of all endogenous variables under `context`.
Assignment evaluate(const ProbabilisticCausalModel& model, const Context& context);

ProbabilisticCausalModel intervene(const ProbabilisticCausalModel& model,
                                   const Intervention& intervention);

/// Y_{X<-x}(u).
double counterfactual(const ProbabilisticCausalModel& model, const Context& context,
                      const Intervention& intervention, const std::string& target);

/// Deterministic in (seed, index).
Context sample_context(const ProbabilisticCausalModel& model, std::uint64_t seed,
                       std::uint64_t index);

}  // namespace fairpool
