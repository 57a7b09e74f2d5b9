#include <algorithm>
#include <charconv>
#include <cmath>

#include "fairpool/dsl.hpp"

namespace fairpool {

namespace {

struct Line {
  std::string_view text;  // comment stripped
  std::size_t number;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 1;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    out.push_back(Line{line, number++});
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Column (1-based) of `part` inside `line`; both views share storage.
std::size_t column_of(const Line& line, std::string_view part) {
  return static_cast<std::size_t>(part.data() - line.text.data()) + 1;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  const auto ok = [](char c, bool first) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
           (!first && c >= '0' && c <= '9');
  };
  if (!ok(s.front(), true)) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return ok(c, false); });
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto at = s.find(sep);
    out.push_back(s.substr(0, at));
    if (at == std::string_view::npos) return out;
    s.remove_prefix(at + 1);
  }
}

}  // namespace

void EncodingTable::add(const std::string& variable, const std::string& token, double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::InvalidParameter, "encoding for " + variable + "." + token +
                                                 " is not finite");
  }
  if (!entries_[variable].emplace(token, value).second) {
    throw Error(ErrorCode::DuplicateDeclaration,
                "token '" + token + "' is already encoded for '" + variable + "'");
  }
}

std::optional<double> EncodingTable::lookup(const std::string& variable,
                                            const std::string& token) const {
  auto v = entries_.find(variable);
  if (v == entries_.end()) return std::nullopt;
  auto t = v->second.find(token);
  if (t == v->second.end()) return std::nullopt;
  return t->second;
}

EncodingTable parse_encoding(std::string_view text) {
  EncodingTable table;
  for (const Line& line : split_lines(text)) {
    const auto body = trim(line.text);
    if (body.empty()) continue;
    const SourceLocation at{line.number, column_of(line, body)};
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::SyntaxError, "expected 'Variable.Token = NUMBER'", at);
    }
    const auto key = trim(body.substr(0, eq));
    const auto dot = key.find('.');
    const auto variable = dot == std::string_view::npos ? std::string_view{} : key.substr(0, dot);
    const auto token = dot == std::string_view::npos ? std::string_view{} : key.substr(dot + 1);
    if (!valid_name(variable) || !valid_name(token)) {
      throw Error(ErrorCode::SyntaxError, "expected 'Variable.Token' before '='", at);
    }
    const auto value_text = trim(body.substr(eq + 1));
    const auto value = parse_number(value_text);
    if (!value) {
      throw Error(ErrorCode::SyntaxError, "expected a number after '='",
                  SourceLocation{line.number, column_of(line, value_text)});
    }
    try {
      table.add(std::string(variable), std::string(token), *value);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), at);
    }
  }
  return table;
}

double resolve_token(const std::string& variable, const std::string& token,
                     const EncodingTable& encoding) {
  if (auto number = parse_number(token)) return *number;
  if (auto encoded = encoding.lookup(variable, token)) return *encoded;
  throw Error(ErrorCode::UnknownToken,
              "token '" + token + "' has no encoding for '" + variable + "'");
}

std::vector<EvidenceRecord> parse_evidence(std::string_view text, const EncodingTable& encoding,
                                           std::span<const ProbabilisticCausalModel> models) {
  std::vector<EvidenceRecord> records;
  for (const Line& line : split_lines(text)) {
    const auto body = trim(line.text);
    if (body.empty()) continue;
    const SourceLocation at{line.number, column_of(line, body)};
    const auto eq = body.find('=');
    const auto open = body.find('{');
    if (eq == std::string_view::npos || open == std::string_view::npos || open < eq ||
        body.back() != '}' || !trim(body.substr(eq + 1, open - eq - 1)).empty()) {
      throw Error(ErrorCode::SyntaxError, "expected 'Label = { Var=value; ... }'", at);
    }
    EvidenceRecord record;
    record.label = std::string(trim(body.substr(0, eq)));
    record.location = at;
    if (!valid_name(record.label)) {
      throw Error(ErrorCode::SyntaxError, "invalid record label '" + record.label + "'", at);
    }
    if (std::any_of(records.begin(), records.end(),
                    [&](const EvidenceRecord& r) { return r.label == record.label; })) {
      throw Error(ErrorCode::DuplicateDeclaration, "record '" + record.label + "' appears twice",
                  at);
    }

    const auto inner = body.substr(open + 1, body.size() - open - 2);
    for (const auto raw : split(inner, ';')) {
      const auto pair = trim(raw);
      if (pair.empty()) continue;
      const SourceLocation pair_at{line.number, column_of(line, pair)};
      const auto peq = pair.find('=');
      if (peq == std::string_view::npos) {
        throw Error(ErrorCode::SyntaxError, "expected 'Var=value'", pair_at);
      }
      const std::string variable(trim(pair.substr(0, peq)));
      const std::string token(trim(pair.substr(peq + 1)));
      if (!valid_name(variable) || token.empty()) {
        throw Error(ErrorCode::SyntaxError, "expected 'Var=value'", pair_at);
      }
      if (record.tokens.count(variable)) {
        throw Error(ErrorCode::DuplicateDeclaration,
                    "'" + variable + "' assigned twice in '" + record.label + "'", pair_at);
      }
      for (const auto& model : models) {
        auto i = model.index_of(variable);
        if (!i || model.variables()[*i].kind != VariableKind::Endogenous ||
            variable == model.predictor()) {
          throw Error(ErrorCode::UnknownVariable,
                      "'" + variable + "' is not an endogenous feature of model '" +
                          model.label() + "'",
                      pair_at);
        }
      }
      double value = 0.0;
      try {
        value = resolve_token(variable, token, encoding);
      } catch (const Error& e) {
        throw Error(e.code(), e.detail(), pair_at);
      }
      record.tokens.emplace(variable, token);
      record.values.emplace(variable, value);
    }
    records.push_back(std::move(record));
  }
  return records;
}

FairnessSpec parse_fairness_spec(std::string_view text,
                                 std::span<const ProbabilisticCausalModel> models) {
  FairnessSpec spec;
  std::optional<std::string> exogenous_side;
  std::set<std::string> seen;
  bool have_predictor = false;

  for (const Line& line : split_lines(text)) {
    const auto body = trim(line.text);
    if (body.empty()) continue;
    const SourceLocation at{line.number, column_of(line, body)};
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::SyntaxError, "expected 'key = value'", at);
    }
    const std::string key(trim(body.substr(0, eq)));
    const auto value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::DuplicateDeclaration, "key '" + key + "' given twice", at);
    }

    std::vector<std::string> names;
    for (const auto part : split(value, ',')) {
      const auto name = trim(part);
      if (name.empty() && value.empty()) break;
      if (!valid_name(name)) {
        throw Error(ErrorCode::SyntaxError, "invalid name '" + std::string(name) + "'", at);
      }
      names.emplace_back(name);
    }

    if (key == "predictor") {
      if (names.size() != 1) throw Error(ErrorCode::SyntaxError, "expected one predictor", at);
      spec.predictor = names.front();
      have_predictor = true;
    } else if (key == "protected" || key == "features") {
      auto& group = key == "protected" ? spec.protected_attributes : spec.features;
      for (auto& n : names) {
        if (!group.insert(n).second) {
          throw Error(ErrorCode::DuplicateDeclaration, "'" + n + "' listed twice", at);
        }
      }
    } else if (key == "exogenous") {
      if (names.size() != 1 ||
          (names[0] != "features" && names[0] != "protected" && names[0] != "listed")) {
        throw Error(ErrorCode::SyntaxError, "exogenous must be 'features', 'protected' or 'listed'",
                    at);
      }
      exogenous_side = names[0];
    } else {
      throw Error(ErrorCode::SyntaxError, "unknown key '" + key + "'", at);
    }
  }
  if (!have_predictor) throw Error(ErrorCode::SyntaxError, "missing 'predictor = ...'");

  if (exogenous_side && *exogenous_side != "listed") {
    auto& group = *exogenous_side == "features" ? spec.features : spec.protected_attributes;
    for (const auto& model : models) {
      for (auto i : model.exogenous_indices()) {
        const auto& name = model.variables()[i].name;
        if (!spec.features.count(name) && !spec.protected_attributes.count(name)) {
          group.insert(name);
        }
      }
    }
  }
  spec.validate(models);
  return spec;
}

std::vector<std::string> model_set_warnings(std::span<const ProbabilisticCausalModel> models) {
  std::vector<std::string> warnings;
  std::map<std::string, std::pair<std::string, std::size_t>> categories;  // var -> (model, count)
  for (const auto& model : models) {
    for (const auto& v : model.variables()) {
      if (!v.distribution) continue;
      const auto* c = std::get_if<Categorical>(&v.distribution->family());
      if (!c) continue;
      auto [it, fresh] = categories.emplace(v.name, std::make_pair(model.label(), c->weights.size()));
      if (!fresh && it->second.second != c->weights.size()) {
        warnings.push_back("categorical '" + v.name + "' has " +
                           std::to_string(it->second.second) + " categories in model '" +
                           it->second.first + "' but " + std::to_string(c->weights.size()) +
                           " in model '" + model.label() + "'; index 0 is assumed to name the "
                           "same category in both");
      }
    }
  }
  return warnings;
}

}  // namespace fairpool
