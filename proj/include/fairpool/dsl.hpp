#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairpool/fairness_spec.hpp"
#include "fairpool/model.hpp"

namespace fairpool {

/// A parsed `.scm` file together with where each declaration begins.
struct ModelDocument {
  std::string source;
  ProbabilisticCausalModel model;
  std::vector<SourceLocation> declarations;  // parallel to model.variables()
};

/// Grammar:
///
///   model  := 'model' STRING '{' decl* '}'
///   decl   := 'exogenous' ID '~' DIST
///           | 'endogenous' ID '=' expr
///           | 'predictor' ID '=' expr
///   DIST   := NAME '(' [param (',' param)*] ')'
///   param  := NAME '=' (NUMBER | '[' NUMBER (',' NUMBER)* ']')
///   expr   := 'if' cmp 'then' expr 'else' expr | cmp
///   cmp    := sum [('=' | '!=' | '<' | '<=' | '>' | '>=') sum]
///   sum    := term (('+' | '-') term)*
///   term   := unary (('*' | '/') unary)*
///   unary  := '-' unary | NUMBER | ID | '(' expr ')'
///
/// `#` starts a comment running to the end of the line. Distributions are
/// Poisson(lambda), Bernoulli(p), Categorical(weights=[...]), Beta(alpha,
/// beta) and PointMass(value). Every failure is an Error with a location.
ModelDocument parse_model_document(std::string_view text);
ProbabilisticCausalModel parse_model(std::string_view text);

/// Canonical text: one declaration per line in declaration order, single
/// spaces, minimal parentheses, shortest round-trip number formatting.
std::string serialize_model(const ProbabilisticCausalModel& model);
std::string format_expression(const Expression& expression);
std::string format_distribution(const Distribution& distribution);
/// Shortest text that parses back to exactly `value`.
std::string format_number(double value);

/// Named evidence tokens per variable, e.g. Gnd: F -> 1, M -> 0.
class EncodingTable {
 public:
  /// DuplicateDeclaration if the token is already defined for `variable`.
  void add(const std::string& variable, const std::string& token, double value);
  std::optional<double> lookup(const std::string& variable, const std::string& token) const;
  const std::map<std::string, std::map<std::string, double>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::map<std::string, std::map<std::string, double>> entries_;
};

/// `.enc` format: one `Variable.Token = NUMBER` per line.
EncodingTable parse_encoding(std::string_view text);

struct EvidenceRecord {
  std::string label;
  std::map<std::string, std::string> tokens;  // raw text per variable
  Assignment values;                          // resolved numbers
  SourceLocation location;
};

/// `.evd` format, one record per line:
///
///   App1 = { Age=22; Gnd=F; Dpt=ComputerScience; Mrk=0.8 }
///
/// Numeric tokens pass through; others resolve through `encoding`
/// (UnknownToken). When `models` is non-empty every variable must be a
/// non-predictor endogenous variable of each model (UnknownVariable).
std::vector<EvidenceRecord> parse_evidence(std::string_view text, const EncodingTable& encoding,
                                           std::span<const ProbabilisticCausalModel> models = {});

/// Resolves one token for `variable` the same way parse_evidence does.
double resolve_token(const std::string& variable, const std::string& token,
                     const EncodingTable& encoding);

/// `.fair` format, `key = value` lines:
///
///   predictor = Y
///   protected = Gnd
///   features  = Age, Dpt, Mrk, Job, Cvr
///   exogenous = features      # or: protected | listed (default)
///
/// `exogenous` assigns every exogenous variable not named explicitly to the
/// given side. The result is validated against `models`.
FairnessSpec parse_fairness_spec(std::string_view text,
                                 std::span<const ProbabilisticCausalModel> models);

/// Non-fatal inconsistencies across a model set, e.g. a categorical
/// exogenous variable with a different number of categories per model.
std::vector<std::string> model_set_warnings(std::span<const ProbabilisticCausalModel> models);

}  // namespace fairpool
