#include "fairpool/expression.hpp"

#include "fairpool/error.hpp"

namespace fairpool {

std::string_view symbol(BinaryOp op) noexcept {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
  }
  return "?";
}

std::string_view symbol(CompareOp op) noexcept {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

Expression Expression::constant(double value) {
  return Expression(std::make_shared<const ExpressionNode>(ExpressionNode{ConstantExpr{value}}));
}

Expression Expression::variable(std::string name) {
  return Expression(
      std::make_shared<const ExpressionNode>(ExpressionNode{VarRefExpr{std::move(name)}}));
}

Expression Expression::binary(BinaryOp op, Expression lhs, Expression rhs) {
  return Expression(std::make_shared<const ExpressionNode>(
      ExpressionNode{BinaryExpr{op, std::move(lhs), std::move(rhs)}}));
}

Expression Expression::compare(CompareOp op, Expression lhs, Expression rhs) {
  return Expression(std::make_shared<const ExpressionNode>(
      ExpressionNode{ComparisonExpr{op, std::move(lhs), std::move(rhs)}}));
}

Expression Expression::if_then_else(Expression condition, Expression then_branch,
                                    Expression else_branch) {
  if (!condition.is_comparison()) {
    throw Error(ErrorCode::InvalidArgument, "if-condition must be a comparison");
  }
  return Expression(std::make_shared<const ExpressionNode>(ExpressionNode{
      IfThenElseExpr{std::move(condition), std::move(then_branch), std::move(else_branch)}}));
}

bool Expression::is_comparison() const noexcept {
  return std::holds_alternative<ComparisonExpr>(node_->value);
}

namespace {

void collect(const Expression& e, std::set<std::string>& out) {
  const auto& v = e.node().value;
  if (const auto* ref = std::get_if<VarRefExpr>(&v)) {
    out.insert(ref->name);
  } else if (const auto* b = std::get_if<BinaryExpr>(&v)) {
    collect(b->lhs, out);
    collect(b->rhs, out);
  } else if (const auto* c = std::get_if<ComparisonExpr>(&v)) {
    collect(c->lhs, out);
    collect(c->rhs, out);
  } else if (const auto* i = std::get_if<IfThenElseExpr>(&v)) {
    collect(i->condition, out);
    collect(i->then_branch, out);
    collect(i->else_branch, out);
  }
}

}  // namespace

std::set<std::string> Expression::references() const {
  std::set<std::string> out;
  collect(*this, out);
  return out;
}

bool operator==(const Expression& a, const Expression& b) {
  if (a.node_ == b.node_) return true;
  const auto& x = a.node().value;
  const auto& y = b.node().value;
  if (x.index() != y.index()) return false;
  if (const auto* c = std::get_if<ConstantExpr>(&x)) {
    return c->value == std::get<ConstantExpr>(y).value;
  }
  if (const auto* r = std::get_if<VarRefExpr>(&x)) {
    return r->name == std::get<VarRefExpr>(y).name;
  }
  if (const auto* bx = std::get_if<BinaryExpr>(&x)) {
    const auto& by = std::get<BinaryExpr>(y);
    return bx->op == by.op && bx->lhs == by.lhs && bx->rhs == by.rhs;
  }
  if (const auto* cx = std::get_if<ComparisonExpr>(&x)) {
    const auto& cy = std::get<ComparisonExpr>(y);
    return cx->op == cy.op && cx->lhs == cy.lhs && cx->rhs == cy.rhs;
  }
  const auto& ix = std::get<IfThenElseExpr>(x);
  const auto& iy = std::get<IfThenElseExpr>(y);
  return ix.condition == iy.condition && ix.then_branch == iy.then_branch &&
         ix.else_branch == iy.else_branch;
}

}  // namespace fairpool
