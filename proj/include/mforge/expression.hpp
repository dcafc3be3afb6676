#pragma once

#include <memory>
#include <string>

namespace mforge {

/// Variables available to boundary-data expressions: the reference point
/// (x, y) on the particle curve and the reference normal (nu1, nu2).
struct ExpressionVars {
  double x = 0.0;
  double y = 0.0;
  double nu1 = 0.0;
  double nu2 = 0.0;
};

/// Closed-form scalar expression over x, y, nu1, nu2.
///
/// Grammar: sums and products of numbers, the four variables, the constant
/// `pi`, parentheses, unary minus and `^` (right associative, binds tighter
/// than unary minus, so `-x^2` is `-(x^2)`).
class Expression {
public:
  Expression();
  /// Throws ValidationError on malformed input.
  explicit Expression(std::string source);

  double operator()(const ExpressionVars &vars) const;
  const std::string &source() const { return source_; }
  /// True when the expression does not reference any variable.
  bool is_constant() const;

  bool operator==(const Expression &other) const { return source_ == other.source_; }

  struct Node;

private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

} // namespace mforge
