#include <charconv>
#include <cmath>
#include <optional>
#include <set>

#include "fairpool/dsl.hpp"

namespace fairpool {

namespace {

constexpr int kMaxNesting = 200;

enum class Tok {
  Ident,
  Number,
  String,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  Tilde,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  Plus,
  Minus,
  Star,
  Slash,
  End,
};

struct Token {
  Tok kind;
  std::string text;  // identifier, unescaped string, or number spelling
  double number = 0.0;
  SourceLocation at;
};

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::Ident: return "'" + t.text + "'";
    case Tok::Number: return "number " + t.text;
    case Tok::String: return "string";
    case Tok::End: return "end of input";
    default: return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      const SourceLocation at = here();
      if (pos_ >= text_.size()) {
        out.push_back(Token{Tok::End, "", 0.0, at});
        return out;
      }
      const char c = text_[pos_];
      if (ident_start(c)) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) advance();
        out.push_back(Token{Tok::Ident, std::string(text_.substr(start, pos_ - start)), 0.0, at});
      } else if (digit(c)) {
        out.push_back(number(at));
      } else if (c == '"') {
        out.push_back(string(at));
      } else {
        out.push_back(symbol(at));
      }
    }
  }

 private:
  SourceLocation here() const { return {line_, column_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  Token number(SourceLocation at) {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && digit(text_[pos_])) advance();
    if (pos_ + 1 < text_.size() && text_[pos_] == '.' && digit(text_[pos_ + 1])) {
      advance();
      while (pos_ < text_.size() && digit(text_[pos_])) advance();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && digit(text_[look])) {
        while (pos_ < look) advance();
        while (pos_ < text_.size() && digit(text_[pos_])) advance();
      }
    }
    const std::string_view spelling = text_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(spelling.data(), spelling.data() + spelling.size(), value);
    if (ec != std::errc() || ptr != spelling.data() + spelling.size() || !std::isfinite(value)) {
      throw Error(ErrorCode::SyntaxError, "number '" + std::string(spelling) + "' is out of range",
                  at);
    }
    return Token{Tok::Number, std::string(spelling), value, at};
  }

  Token string(SourceLocation at) {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= text_.size()) throw Error(ErrorCode::SyntaxError, "unterminated string", at);
      const char c = text_[pos_];
      if (c == '"') {
        advance();
        return Token{Tok::String, out, 0.0, at};
      }
      if (c == '\n' || static_cast<unsigned char>(c) < 0x20) {
        throw Error(ErrorCode::SyntaxError, "control character in string", here());
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\\')) {
          throw Error(ErrorCode::SyntaxError, "unknown escape in string", here());
        }
      }
      out.push_back(text_[pos_]);
      advance();
    }
  }

  Token symbol(SourceLocation at) {
    const char c = text_[pos_];
    const char next = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
    auto one = [&](Tok kind) {
      advance();
      return Token{kind, std::string(1, c), 0.0, at};
    };
    auto two = [&](Tok kind) {
      advance();
      advance();
      return Token{kind, std::string{c, next}, 0.0, at};
    };
    switch (c) {
      case '{': return one(Tok::LBrace);
      case '}': return one(Tok::RBrace);
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case '[': return one(Tok::LBracket);
      case ']': return one(Tok::RBracket);
      case ',': return one(Tok::Comma);
      case '~': return one(Tok::Tilde);
      case '=': return one(Tok::Eq);
      case '+': return one(Tok::Plus);
      case '-': return one(Tok::Minus);
      case '*': return one(Tok::Star);
      case '/': return one(Tok::Slash);
      case '<': return next == '=' ? two(Tok::Le) : one(Tok::Lt);
      case '>': return next == '=' ? two(Tok::Ge) : one(Tok::Gt);
      case '!':
        if (next == '=') return two(Tok::Ne);
        break;
      default: break;
    }
    const auto byte = static_cast<unsigned char>(c);
    std::string shown = byte >= 0x20 && byte < 0x7f ? std::string("'") + c + "'"
                                                    : "byte 0x" + hex(byte);
    throw Error(ErrorCode::SyntaxError, "unexpected " + shown, at);
  }

  static std::string hex(unsigned char b) {
    constexpr char digits[] = "0123456789abcdef";
    return {digits[b >> 4], digits[b & 15]};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

bool is_keyword(const std::string& s) {
  static const std::set<std::string> keywords = {"model",     "exogenous", "endogenous",
                                                 "predictor", "if",        "then",
                                                 "else"};
  return keywords.count(s) != 0;
}

struct Reference {
  std::string name;
  SourceLocation at;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  ModelDocument parse_document(std::string_view source) {
    expect_keyword("model");
    const Token label = expect(Tok::String, "model label string");
    expect(Tok::LBrace, "'{'");

    std::vector<Variable> variables;
    std::vector<SourceLocation> declared_at;
    std::vector<std::vector<Reference>> references;
    std::optional<std::string> predictor;
    std::optional<SourceLocation> predictor_at;

    while (peek().kind != Tok::RBrace) {
      const Token head = next();
      if (head.kind != Tok::Ident) fail_expected("a declaration or '}'", head);
      if (head.text == "exogenous") {
        const Token name = expect_name();
        expect(Tok::Tilde, "'~'");
        variables.push_back(Variable::exogenous(name.text, distribution()));
        declared_at.push_back(name.at);
        references.emplace_back();
      } else if (head.text == "endogenous" || head.text == "predictor") {
        const Token name = expect_name();
        expect(Tok::Eq, "'='");
        refs_.clear();
        Expression eq = expression();
        variables.push_back(Variable::endogenous(name.text, std::move(eq)));
        declared_at.push_back(name.at);
        references.push_back(std::move(refs_));
        if (head.text == "predictor") {
          if (predictor) {
            throw Error(ErrorCode::DuplicateDeclaration,
                        "second predictor declaration (first is '" + *predictor + "')", name.at);
          }
          predictor = name.text;
          predictor_at = name.at;
        }
      } else {
        fail_expected("'exogenous', 'endogenous', 'predictor' or '}'", head);
      }
    }
    next();  // '}'
    if (peek().kind != Tok::End) fail_expected("end of input", peek());
    if (!predictor) {
      throw Error(ErrorCode::SyntaxError, "model declares no predictor", peek().at);
    }

    // Resolve references here so undeclared names are reported where they
    // are used; the remaining checks happen in the model constructor.
    std::set<std::string> names;
    for (const auto& v : variables) names.insert(v.name);
    for (const auto& refs : references) {
      for (const auto& r : refs) {
        if (!names.count(r.name)) {
          throw Error(ErrorCode::UndeclaredVariable, "undeclared variable '" + r.name + "'", r.at);
        }
      }
    }

    auto model = ProbabilisticCausalModel::create(label.text, std::move(variables), *predictor,
                                                  declared_at);
    return ModelDocument{std::string(source), std::move(model), std::move(declared_at)};
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token next() {
    Token t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  bool at_keyword(std::string_view kw) const {
    return peek().kind == Tok::Ident && peek().text == kw;
  }

  [[noreturn]] void fail_expected(const std::string& what, const Token& got) {
    throw Error(ErrorCode::SyntaxError, "expected " + what + ", found " + describe(got), got.at);
  }

  Token expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) fail_expected(what, peek());
    return next();
  }

  void expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) fail_expected("'" + std::string(kw) + "'", peek());
    next();
  }

  Token expect_name() {
    const Token t = expect(Tok::Ident, "a variable name");
    if (is_keyword(t.text)) fail_expected("a variable name", t);
    return t;
  }

  Distribution distribution() {
    const Token family = expect(Tok::Ident, "a distribution name");
    expect(Tok::LParen, "'('");
    std::map<std::string, std::vector<double>> params;
    std::map<std::string, bool> is_list;
    if (peek().kind != Tok::RParen) {
      for (;;) {
        const Token key = expect(Tok::Ident, "a parameter name");
        expect(Tok::Eq, "'='");
        std::vector<double> values;
        bool list = false;
        if (peek().kind == Tok::LBracket) {
          next();
          list = true;
          values.push_back(signed_number());
          while (peek().kind == Tok::Comma) {
            next();
            values.push_back(signed_number());
          }
          expect(Tok::RBracket, "']'");
        } else {
          values.push_back(signed_number());
        }
        if (params.count(key.text)) {
          throw Error(ErrorCode::DuplicateDeclaration, "parameter '" + key.text + "' given twice",
                      key.at);
        }
        params[key.text] = std::move(values);
        is_list[key.text] = list;
        if (peek().kind != Tok::Comma) break;
        next();
      }
    }
    expect(Tok::RParen, "')'");

    auto scalar = [&](const std::string& key) {
      auto it = params.find(key);
      if (it == params.end() || is_list[key]) {
        throw Error(ErrorCode::InvalidParameter,
                    family.text + " needs a numeric parameter '" + key + "'", family.at);
      }
      return it->second.front();
    };
    auto only = [&](std::initializer_list<const char*> allowed) {
      for (const auto& [k, v] : params) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) {
          throw Error(ErrorCode::InvalidParameter,
                      family.text + " has no parameter '" + k + "'", family.at);
        }
      }
    };

    try {
      if (family.text == "Poisson") {
        only({"lambda"});
        return Distribution::poisson(scalar("lambda"));
      }
      if (family.text == "Bernoulli") {
        only({"p"});
        return Distribution::bernoulli(scalar("p"));
      }
      if (family.text == "Categorical") {
        only({"weights"});
        auto it = params.find("weights");
        if (it == params.end() || !is_list["weights"]) {
          throw Error(ErrorCode::InvalidParameter, "Categorical needs weights=[...]", family.at);
        }
        return Distribution::categorical(it->second);
      }
      if (family.text == "Beta") {
        only({"alpha", "beta"});
        return Distribution::beta(scalar("alpha"), scalar("beta"));
      }
      if (family.text == "PointMass") {
        only({"value"});
        return Distribution::point_mass(scalar("value"));
      }
    } catch (const Error& e) {
      if (e.where()) throw;
      throw Error(e.code(), e.detail(), family.at);
    }
    throw Error(ErrorCode::SyntaxError, "unknown distribution '" + family.text + "'", family.at);
  }

  double signed_number() {
    bool negative = false;
    if (peek().kind == Tok::Minus) {
      next();
      negative = true;
    }
    const Token t = expect(Tok::Number, "a number");
    return negative ? -t.number : t.number;
  }

  struct Depth {
    explicit Depth(Parser& p) : parser(p) {
      if (++parser.depth_ > kMaxNesting) {
        throw Error(ErrorCode::SyntaxError, "expression nested too deeply", parser.peek().at);
      }
    }
    ~Depth() { --parser.depth_; }
    Parser& parser;
  };

  Expression expression() {
    Depth guard(*this);
    if (at_keyword("if")) {
      next();
      const SourceLocation cond_at = peek().at;
      Expression condition = comparison();
      if (!condition.is_comparison()) {
        throw Error(ErrorCode::SyntaxError, "if-condition must be a comparison", cond_at);
      }
      expect_keyword("then");
      Expression then_branch = expression();
      expect_keyword("else");
      Expression else_branch = expression();
      return Expression::if_then_else(std::move(condition), std::move(then_branch),
                                      std::move(else_branch));
    }
    return comparison();
  }

  Expression comparison() {
    Expression lhs = sum();
    std::optional<CompareOp> op;
    switch (peek().kind) {
      case Tok::Eq: op = CompareOp::Eq; break;
      case Tok::Ne: op = CompareOp::Ne; break;
      case Tok::Lt: op = CompareOp::Lt; break;
      case Tok::Le: op = CompareOp::Le; break;
      case Tok::Gt: op = CompareOp::Gt; break;
      case Tok::Ge: op = CompareOp::Ge; break;
      default: return lhs;
    }
    next();
    Expression rhs = sum();
    return Expression::compare(*op, std::move(lhs), std::move(rhs));
  }

  Expression sum() {
    Expression lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const BinaryOp op = next().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = Expression::binary(op, std::move(lhs), term());
    }
    return lhs;
  }

  Expression term() {
    Expression lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const BinaryOp op = next().kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      lhs = Expression::binary(op, std::move(lhs), unary());
    }
    return lhs;
  }

  Expression unary() {
    Depth guard(*this);
    const Token t = next();
    switch (t.kind) {
      case Tok::Minus:
        if (peek().kind == Tok::Number) return Expression::constant(-next().number);
        return Expression::binary(BinaryOp::Sub, Expression::constant(0.0), unary());
      case Tok::Number: return Expression::constant(t.number);
      case Tok::Ident:
        if (is_keyword(t.text)) fail_expected("an expression", t);
        refs_.push_back(Reference{t.text, t.at});
        return Expression::variable(t.text);
      case Tok::LParen: {
        Expression inner = expression();
        expect(Tok::RParen, "')'");
        return inner;
      }
      default: fail_expected("an expression", t);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<Reference> refs_;
};

// Serialization precedence levels; higher binds tighter.
int precedence(const Expression& e) {
  const auto& v = e.node().value;
  if (std::holds_alternative<IfThenElseExpr>(v)) return 0;
  if (std::holds_alternative<ComparisonExpr>(v)) return 1;
  if (const auto* b = std::get_if<BinaryExpr>(&v)) {
    return b->op == BinaryOp::Add || b->op == BinaryOp::Sub ? 2 : 3;
  }
  return 4;
}

void format_into(const Expression& e, std::string& out);

void operand(const Expression& e, bool parens, std::string& out) {
  if (parens) out += '(';
  format_into(e, out);
  if (parens) out += ')';
}

void format_into(const Expression& e, std::string& out) {
  const auto& v = e.node().value;
  if (const auto* c = std::get_if<ConstantExpr>(&v)) {
    out += format_number(c->value);
  } else if (const auto* r = std::get_if<VarRefExpr>(&v)) {
    out += r->name;
  } else if (const auto* b = std::get_if<BinaryExpr>(&v)) {
    const int p = precedence(e);
    operand(b->lhs, precedence(b->lhs) < p, out);
    out += ' ';
    out += symbol(b->op);
    out += ' ';
    operand(b->rhs, precedence(b->rhs) <= p, out);
  } else if (const auto* c = std::get_if<ComparisonExpr>(&v)) {
    operand(c->lhs, precedence(c->lhs) <= 1, out);
    out += ' ';
    out += symbol(c->op);
    out += ' ';
    operand(c->rhs, precedence(c->rhs) <= 1, out);
  } else {
    const auto& i = std::get<IfThenElseExpr>(v);
    out += "if ";
    format_into(i.condition, out);
    out += " then ";
    format_into(i.then_branch, out);
    out += " else ";
    format_into(i.else_branch, out);
  }
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

ModelDocument parse_model_document(std::string_view text) {
  Parser parser(Lexer(text).run());
  return parser.parse_document(text);
}

ProbabilisticCausalModel parse_model(std::string_view text) {
  return parse_model_document(text).model;
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

std::string format_expression(const Expression& expression) {
  std::string out;
  format_into(expression, out);
  return out;
}

std::string format_distribution(const Distribution& d) {
  const auto& f = d.family();
  if (const auto* p = std::get_if<Poisson>(&f)) return "Poisson(lambda=" + format_number(p->lambda) + ")";
  if (const auto* b = std::get_if<Bernoulli>(&f)) return "Bernoulli(p=" + format_number(b->p) + ")";
  if (const auto* c = std::get_if<Categorical>(&f)) {
    std::string out = "Categorical(weights=[";
    for (std::size_t i = 0; i < c->weights.size(); ++i) {
      if (i) out += ", ";
      out += format_number(c->weights[i]);
    }
    return out + "])";
  }
  if (const auto* b = std::get_if<Beta>(&f)) {
    return "Beta(alpha=" + format_number(b->alpha) + ", beta=" + format_number(b->beta) + ")";
  }
  return "PointMass(value=" + format_number(std::get<PointMass>(f).value) + ")";
}

std::string serialize_model(const ProbabilisticCausalModel& model) {
  std::string out = "model " + quote(model.label()) + " {\n";
  for (const auto& v : model.variables()) {
    if (v.kind == VariableKind::Exogenous) {
      out += "  exogenous " + v.name + " ~ " + format_distribution(*v.distribution) + "\n";
    } else {
      out += v.name == model.predictor() ? "  predictor " : "  endogenous ";
      out += v.name + " = " + format_expression(*v.equation) + "\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace fairpool
