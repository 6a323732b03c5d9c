// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/expression.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace pgdcert {

struct Expression::Node {
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Exp, Neg };
  Kind kind;
  double value = 0.0;              // Const
  std::string name;                // Var
  int exponent = 1;                // Pow
  std::shared_ptr<const Node> a, b;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    auto n = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return n;
  }

private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("expression error at position " + std::to_string(pos_) +
                                " in \"" + s_ + "\": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expr() {
    auto n = term();
    for (;;) {
      if (consume('+')) {
        n = make(Node::Kind::Add, n, term());
      } else if (consume('-')) {
        n = make(Node::Kind::Sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    auto n = unary();
    for (;;) {
      if (consume('*')) {
        n = make(Node::Kind::Mul, n, unary());
      } else if (consume('/')) {
        n = make(Node::Kind::Div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (consume('-')) return make(Node::Kind::Neg, unary());
    return power();
  }

  NodePtr power() {
    auto base = atom();
    if (consume('^')) {
      skip_ws();
      bool neg = consume('-');
      size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == start) fail("integer exponent expected after '^'");
      int e = std::stoi(s_.substr(start, pos_ - start));
      auto n = make(Node::Kind::Pow, base);
      auto m = std::const_pointer_cast<Node>(n);
      m->exponent = neg ? -e : e;
      return n;
    }
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Const;
      n->value = v;
      return n;
    }
    if (c == '(') {
      ++pos_;
      auto n = expr();
      if (!consume(')')) fail("missing ')'");
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (name == "exp") {
        if (!consume('(')) fail("exp expects '('");
        auto arg = expr();
        if (!consume(')')) fail("missing ')' after exp argument");
        return make(Node::Kind::Exp, arg);
      }
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Var;
      n->name = name;
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

double eval_node(const Node& n, const std::vector<std::pair<std::string, double>>& vars) {
  switch (n.kind) {
    case Node::Kind::Const:
      return n.value;
    case Node::Kind::Var:
      for (const auto& [name, v] : vars)
        if (name == n.name) return v;
      throw std::invalid_argument("unbound variable '" + n.name + "' in expression");
    case Node::Kind::Add:
      return eval_node(*n.a, vars) + eval_node(*n.b, vars);
    case Node::Kind::Sub:
      return eval_node(*n.a, vars) - eval_node(*n.b, vars);
    case Node::Kind::Mul:
      return eval_node(*n.a, vars) * eval_node(*n.b, vars);
    case Node::Kind::Div:
      return eval_node(*n.a, vars) / eval_node(*n.b, vars);
    case Node::Kind::Pow:
      return std::pow(eval_node(*n.a, vars), n.exponent);
    case Node::Kind::Exp:
      return std::exp(eval_node(*n.a, vars));
    case Node::Kind::Neg:
      return -eval_node(*n.a, vars);
  }
  return 0.0;
}

void collect_vars(const Node& n, std::set<std::string>& out) {
  if (n.kind == Node::Kind::Var) out.insert(n.name);
  if (n.a) collect_vars(*n.a, out);
  if (n.b) collect_vars(*n.b, out);
}

}  // namespace

Expression Expression::parse(const std::string& src) {
  Expression e;
  e.root_ = Parser(src).run();
  e.src_ = src;
  return e;
}

double Expression::eval(const std::vector<std::pair<std::string, double>>& vars) const {
  if (!root_) throw std::logic_error("eval on empty expression");
  return eval_node(*root_, vars);
}

double Expression::eval1(const std::string& name, double value) const {
  return eval({{name, value}});
}

double Expression::eval2(const std::string& n0, double v0, const std::string& n1, double v1) const {
  return eval({{n0, v0}, {n1, v1}});
}

std::vector<std::string> Expression::variables() const {
  std::set<std::string> s;
  if (root_) collect_vars(*root_, s);
  return {s.begin(), s.end()};
}

}  // namespace pgdcert
