// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_TIME_FN_HPP
#define PGDCERT_TIME_FN_HPP

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "pgdcert/expression.hpp"

namespace pgdcert {

/// Tabulated univariate function, interpreted as continuous piecewise
/// linear between its sample points (clamped outside).
struct TabulatedFn {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  double eval(double s) const;
};

/// Univariate scalar function of one named variable (t or a parameter).
struct ScalarFn {
  std::variant<std::monostate, Expression, TabulatedFn> fn;
  std::string var = "t";

  bool empty() const { return std::holds_alternative<std::monostate>(fn); }
  bool is_expr() const { return std::holds_alternative<Expression>(fn); }
  double eval(double s) const;

  static ScalarFn constant(double c);
  static ScalarFn expr(const std::string& src, const std::string& var);
  static ScalarFn table(Eigen::VectorXd x, Eigen::VectorXd v);
};

/// Scalar function of time used throughout the separated algebra.
/// Three shapes occur: a closed form or tabulated factor, a continuous
/// piecewise-linear nodal field on a grid, and the (piecewise-constant)
/// derivative of such a nodal field.
class TimeFn {
public:
  enum class Kind { Fn, Nodal, NodalDeriv, Custom };

  TimeFn() = default;
  static TimeFn from_fn(ScalarFn f);
  static TimeFn nodal(std::shared_ptr<const Eigen::VectorXd> grid_nodes, Eigen::VectorXd values);
  static TimeFn nodal_deriv(std::shared_ptr<const Eigen::VectorXd> grid_nodes,
                            Eigen::VectorXd values);
  // arbitrary callable with declared piecewise breakpoints
  static TimeFn custom(std::function<double(double)> f,
                       std::shared_ptr<const Eigen::VectorXd> breakpoints);

  Kind kind() const { return kind_; }
  double eval(double t) const;

  // Grid nodes that this function's piecewise structure is aligned to
  // (empty for smooth closed forms).
  const Eigen::VectorXd* breakpoints() const;

private:
  Kind kind_ = Kind::Fn;
  ScalarFn fn_;
  std::shared_ptr<const Eigen::VectorXd> grid_;
  Eigen::VectorXd values_;
  std::function<double(double)> custom_;
};

/// Exact Gauss quadrature (3 points per interval) of products of up to
/// three time functions over [t0, t1], split at every breakpoint of the
/// participants. Exact for piecewise polynomials through degree 5.
double integrate_time(const std::vector<const TimeFn*>& fns, double t0, double t1);

/// Same, with the second factor read in reversed time g(T - t); used for
/// pairing forward and reverse-time quantities.
double integrate_time_reversed(const TimeFn& f, const TimeFn& g_rev, double t0, double t1);

/// Merge breakpoint sets into one strictly increasing grid over [t0, t1].
Eigen::VectorXd merge_breakpoints(const std::vector<const Eigen::VectorXd*>& sets, double t0,
                                  double t1);

}  // namespace pgdcert

#endif
