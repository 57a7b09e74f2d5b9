#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>

namespace fairpool {

enum class BinaryOp { Add, Sub, Mul, Div };
enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view symbol(BinaryOp op) noexcept;
std::string_view symbol(CompareOp op) noexcept;

struct ExpressionNode;

/// Immutable structural-equation AST. Copies share nodes.
class Expression {
 public:
  static Expression constant(double value);
  static Expression variable(std::string name);
  static Expression binary(BinaryOp op, Expression lhs, Expression rhs);
  static Expression compare(CompareOp op, Expression lhs, Expression rhs);
  /// Throws InvalidArgument unless `condition` is a comparison.
  static Expression if_then_else(Expression condition, Expression then_branch,
                                 Expression else_branch);

  const ExpressionNode& node() const noexcept { return *node_; }

  bool is_comparison() const noexcept;
  /// Names of every variable referenced anywhere in the tree.
  std::set<std::string> references() const;

  friend bool operator==(const Expression& a, const Expression& b);

 private:
  explicit Expression(std::shared_ptr<const ExpressionNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExpressionNode> node_;
};

struct ConstantExpr {
  double value;
};
struct VarRefExpr {
  std::string name;
};
struct BinaryExpr {
  BinaryOp op;
  Expression lhs;
  Expression rhs;
};
struct ComparisonExpr {
  CompareOp op;
  Expression lhs;
  Expression rhs;
};
struct IfThenElseExpr {
  Expression condition;
  Expression then_branch;
  Expression else_branch;
};

struct ExpressionNode {
  std::variant<ConstantExpr, VarRefExpr, BinaryExpr, ComparisonExpr, IfThenElseExpr> value;
};

}  // namespace fairpool
