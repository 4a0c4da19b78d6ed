#include "xformlab/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>

namespace xformlab {

ParseError::ParseError(const std::string& message, int column)
    : ValidationError("parse error at column " + std::to_string(column) + ": " + message),
      column_(column) {}

namespace {

struct Node {
  enum class Op { Constant, Variable, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp };
  Op op;
  Real value = 0.0;
  std::unique_ptr<Node> lhs;
  std::unique_ptr<Node> rhs;

  Real eval(Real x) const {
    switch (op) {
      case Op::Constant: return value;
      case Op::Variable: return x;
      case Op::Add: return lhs->eval(x) + rhs->eval(x);
      case Op::Sub: return lhs->eval(x) - rhs->eval(x);
      case Op::Mul: return lhs->eval(x) * rhs->eval(x);
      case Op::Div: return lhs->eval(x) / rhs->eval(x);
      case Op::Neg: return -lhs->eval(x);
      case Op::Sin: return std::sin(lhs->eval(x));
      case Op::Cos: return std::cos(lhs->eval(x));
      case Op::Exp: return std::exp(lhs->eval(x));
    }
    return 0.0;
  }
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make(Node::Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_unique<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = expression();
    skip_space();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') fail("unmatched ')'");
      fail(std::string("unexpected '") + text_[pos_] + "'");
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { fail_at(message, pos_); }
  [[noreturn]] void fail_at(const std::string& message, std::size_t pos) const {
    throw ParseError(message, static_cast<int>(pos) + 1);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expression() {
    NodePtr left = term();
    for (;;) {
      if (accept('+')) {
        left = make(Node::Op::Add, std::move(left), term());
      } else if (accept('-')) {
        left = make(Node::Op::Sub, std::move(left), term());
      } else {
        return left;
      }
    }
  }

  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      if (accept('*')) {
        left = make(Node::Op::Mul, std::move(left), unary());
      } else if (accept('/')) {
        left = make(Node::Op::Div, std::move(left), unary());
      } else {
        return left;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Node::Op::Neg, unary());
    if (accept('+')) return unary();
    return primary();
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) {
      if (!open_.empty()) fail_at("unclosed '('", open_.back());
      fail("unexpected end of expression");
    }
    const char c = text_[pos_];
    if (c == '(') {
      open_.push_back(pos_++);
      NodePtr inner = expression();
      close();
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  void close() {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ')') {
      ++pos_;
      open_.pop_back();
      return;
    }
    if (pos_ < text_.size() && text_[pos_] == ',') fail("too many arguments");
    fail_at("unclosed '('", open_.back());
  }

  NodePtr number() {
    Real value = 0.0;
    const char* begin = text_.data() + pos_;
    const auto [end, ec] = std::from_chars(begin, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = make(Node::Op::Constant);
    n->value = value;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "x") return make(Node::Op::Variable);
    Node::Op op;
    if (name == "sin") {
      op = Node::Op::Sin;
    } else if (name == "cos") {
      op = Node::Op::Cos;
    } else if (name == "exp") {
      op = Node::Op::Exp;
    } else {
      fail_at("unknown identifier '" + std::string(name) + "'", start);
    }
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != '(') {
      fail("expected '(' after " + std::string(name));
    }
    open_.push_back(pos_++);
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ')') fail(std::string(name) + " takes one argument");
    NodePtr arg = expression();
    close();
    return make(op, std::move(arg));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<std::size_t> open_;
};

}  // namespace

ScalarFunction parse_coefficient_expression(std::string_view text) {
  std::shared_ptr<const Node> root = Parser(text).parse();
  return [root](Real x) { return root->eval(x); };
}

}  // namespace xformlab
