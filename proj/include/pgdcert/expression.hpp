// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_EXPRESSION_HPP
#define PGDCERT_EXPRESSION_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace pgdcert {

/// Small closed-form scalar expression: numbers, named variables,
/// + - * /, integer powers via ^, exp(), parentheses, unary minus.
/// Anything richer has to be supplied as a tabulated function.
class Expression {
public:
  Expression() = default;

  // Throws std::invalid_argument with a character position on bad input.
  static Expression parse(const std::string& src);

  double eval(const std::vector<std::pair<std::string, double>>& vars) const;
  double eval1(const std::string& name, double value) const;
  double eval2(const std::string& n0, double v0, const std::string& n1, double v1) const;

  // Names of all variables referenced by the expression.
  std::vector<std::string> variables() const;

  const std::string& source() const { return src_; }
  bool empty() const { return root_ == nullptr; }

  struct Node;

private:
  std::shared_ptr<const Node> root_;
  std::string src_;
};

}  // namespace pgdcert

#endif
