#pragma once

// Closed-form tractions written as "(e1, e2)" over the variables x and y,
// e.g. "(0, 1/10 - 3/10*y)" or "(-x^2/2, y^2)". Supported: numbers, x, y,
// pi, + - * / ^, parentheses and juxtaposition ("3/10y" means (3/10)*y).

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace elastocav {

class ExpressionError : public std::runtime_error {
 public:
  ExpressionError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

namespace detail {

struct ExprNode {
  enum class Kind { Number, X, Y, Neg, Add, Sub, Mul, Div, Pow } kind;
  double value = 0.0;
  std::shared_ptr<const ExprNode> lhs, rhs;

  double eval(double x, double y) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::X: return x;
      case Kind::Y: return y;
      case Kind::Neg: return -lhs->eval(x, y);
      case Kind::Add: return lhs->eval(x, y) + rhs->eval(x, y);
      case Kind::Sub: return lhs->eval(x, y) - rhs->eval(x, y);
      case Kind::Mul: return lhs->eval(x, y) * rhs->eval(x, y);
      case Kind::Div: return lhs->eval(x, y) / rhs->eval(x, y);
      case Kind::Pow: return std::pow(lhs->eval(x, y), rhs->eval(x, y));
    }
    return 0.0;
  }
};

using ExprPtr = std::shared_ptr<const ExprNode>;

inline ExprPtr make_node(ExprNode::Kind k, ExprPtr a = nullptr, ExprPtr b = nullptr, double value = 0.0) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->value = value;
  // Fold constant subtrees so fractions like 1/10 are computed once.
  if (k != ExprNode::Kind::Number && n->lhs && n->lhs->kind == ExprNode::Kind::Number &&
      (!n->rhs || n->rhs->kind == ExprNode::Kind::Number)) {
    const double folded = n->eval(0.0, 0.0);
    n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Number;
    n->value = folded;
  }
  return n;
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : s_(normalize(text)) {}

  std::pair<ExprPtr, ExprPtr> parse_pair() {
    expect('(');
    ExprPtr a = parse_sum();
    expect(',');
    ExprPtr b = parse_sum();
    expect(')');
    skip_ws();
    if (pos_ != s_.size()) throw ExpressionError("unexpected trailing input", pos_);
    return {a, b};
  }

  ExprPtr parse_single() {
    ExprPtr a = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) throw ExpressionError("unexpected trailing input", pos_);
    return a;
  }

 private:
  // The Unicode minus sign is accepted as '-'.
  static std::string normalize(std::string_view in) {
    std::string out;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in.substr(i, 3) == "\xE2\x88\x92") {
        out += '-';
        i += 2;
      } else {
        out += in[i];
      }
    }
    return out;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  void expect(char c) {
    if (peek() != c) {
      throw ExpressionError(std::string("expected '") + c + "'" + (pos_ < s_.size() ? "" : " before end of input"),
                            pos_);
    }
    ++pos_;
  }
  bool starts_primary() {
    const char c = peek();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'x' || c == 'y' || c == '(' || c == 'p';
  }

  ExprPtr parse_sum() {
    ExprPtr lhs = parse_product();
    for (;;) {
      const char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      lhs = make_node(c == '+' ? ExprNode::Kind::Add : ExprNode::Kind::Sub, lhs, parse_product());
    }
  }

  ExprPtr parse_product() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      const char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        lhs = make_node(c == '*' ? ExprNode::Kind::Mul : ExprNode::Kind::Div, lhs, parse_unary());
      } else if (starts_primary()) {
        lhs = make_node(ExprNode::Kind::Mul, lhs, parse_power());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary() {
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return make_node(ExprNode::Kind::Neg, parse_unary());
    }
    if (c == '+') {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (peek() == '^') {
      ++pos_;
      return make_node(ExprNode::Kind::Pow, base, parse_unary());
    }
    return base;
  }

  ExprPtr parse_primary() {
    const char c = peek();
    const std::size_t start = pos_;
    if (c == '(') {
      ++pos_;
      ExprPtr inner = parse_sum();
      expect(')');
      return inner;
    }
    if (s_.compare(pos_, 2, "pi") == 0) {
      pos_ += 2;
      return make_node(ExprNode::Kind::Number, nullptr, nullptr, std::numbers::pi);
    }
    if (c == 'x' || c == 'y') {
      ++pos_;
      return make_node(c == 'x' ? ExprNode::Kind::X : ExprNode::Kind::Y);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        throw ExpressionError("malformed number", start);
      }
      pos_ += used;
      return make_node(ExprNode::Kind::Number, nullptr, nullptr, value);
    }
    if (c == '\0') throw ExpressionError("unexpected end of input", start);
    throw ExpressionError(std::string("unexpected character '") + c + "'", start);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parsed two-component traction; callable as g(x, y).
class TractionExpression {
 public:
  TractionExpression() = default;
  explicit TractionExpression(std::string text) : text_(std::move(text)) {
    auto [a, b] = detail::ExprParser(text_).parse_pair();
    first_ = std::move(a);
    second_ = std::move(b);
  }

  const std::string& text() const { return text_; }
  Eigen::Vector2d operator()(double x, double y) const { return {first_->eval(x, y), second_->eval(x, y)}; }

 private:
  std::string text_;
  detail::ExprPtr first_, second_;
};

inline TractionExpression parse_traction_expression(const std::string& text) { return TractionExpression(text); }

/// Scalar expression in x and y, mainly for tests and configuration values.
inline double evaluate_scalar_expression(const std::string& text, double x = 0.0, double y = 0.0) {
  return detail::ExprParser(text).parse_single()->eval(x, y);
}

}  // namespace elastocav
