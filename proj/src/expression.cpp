#include "mforge/expression.hpp"

#include "mforge/errors.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace mforge {

struct Expression::Node {
  enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow };
  Kind kind = Kind::Number;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(const ExpressionVars &v) const {
    switch (kind) {
    case Kind::Number:
      return value;
    case Kind::Var:
      switch (var) {
      case 0:
        return v.x;
      case 1:
        return v.y;
      case 2:
        return v.nu1;
      default:
        return v.nu2;
      }
    case Kind::Neg:
      return -lhs->eval(v);
    case Kind::Add:
      return lhs->eval(v) + rhs->eval(v);
    case Kind::Sub:
      return lhs->eval(v) - rhs->eval(v);
    case Kind::Mul:
      return lhs->eval(v) * rhs->eval(v);
    case Kind::Div:
      return lhs->eval(v) / rhs->eval(v);
    case Kind::Pow: {
      const double base = lhs->eval(v);
      const double expo = rhs->eval(v);
      // small integer powers are the common case and std::pow is slow for them
      if (expo == std::floor(expo) && std::abs(expo) <= 16) {
        double r = 1.0;
        for (int k = 0; k < static_cast<int>(std::abs(expo)); ++k) r *= base;
        return expo < 0 ? 1.0 / r : r;
      }
      return std::pow(base, expo);
    }
    }
    return 0.0;
  }

  bool uses_vars() const {
    if (kind == Kind::Var) return true;
    return (lhs && lhs->uses_vars()) || (rhs && rhs->uses_vars());
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
public:
  explicit Parser(const std::string &src) : src_(src) {}

  NodePtr parse() {
    NodePtr n = sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return n;
  }

private:
  [[noreturn]] void fail(const std::string &msg) const {
    throw ValidationError("expression \"" + src_ + "\" at offset " + std::to_string(pos_) +
                          ": " + msg);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    NodePtr n = product();
    for (;;) {
      if (accept('+'))
        n = make(Kind::Add, n, product());
      else if (accept('-'))
        n = make(Kind::Sub, n, product());
      else
        return n;
    }
  }

  NodePtr product() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*'))
        n = make(Kind::Mul, n, unary());
      else if (accept('/'))
        n = make(Kind::Div, n, unary());
      else
        return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Kind::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Kind::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    if (accept('(')) {
      NodePtr n = sum();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char *begin = src_.c_str() + pos_;
      char *end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      const std::string name = src_.substr(start, pos_ - start);
      static const std::vector<std::string> vars{"x", "y", "nu1", "nu2"};
      for (std::size_t k = 0; k < vars.size(); ++k) {
        if (name == vars[k]) {
          auto n = std::make_shared<Expression::Node>();
          n->kind = Kind::Var;
          n->var = static_cast<int>(k);
          return n;
        }
      }
      if (name == "pi") {
        auto n = std::make_shared<Expression::Node>();
        n->value = std::numbers::pi;
        return n;
      }
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  const std::string &src_;
  std::size_t pos_ = 0;
};

} // namespace

Expression::Expression() : Expression("0") {}

Expression::Expression(std::string source) : source_(std::move(source)) {
  root_ = Parser(source_).parse();
}

double Expression::operator()(const ExpressionVars &vars) const { return root_->eval(vars); }

bool Expression::is_constant() const { return !root_->uses_vars(); }

} // namespace mforge
