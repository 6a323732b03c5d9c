// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "pgdcert/expression.hpp"
#include "pgdcert/time_fn.hpp"

using namespace pgdcert;

TEST_CASE("expression grammar") {
  CHECK(Expression::parse("1").eval({}) == 1.0);
  CHECK(Expression::parse("1+2*3").eval({}) == 7.0);
  CHECK(Expression::parse("(1+2)*3").eval({}) == 9.0);
  CHECK(Expression::parse("2*x").eval1("x", 0.25) == 0.5);
  CHECK(Expression::parse("t^2").eval1("t", 3.0) == 9.0);
  CHECK(Expression::parse("-t^2 + 1").eval1("t", 2.0) == -3.0);
  CHECK(Expression::parse("exp(t)").eval1("t", 1.0) == doctest::Approx(std::exp(1.0)));
  CHECK(Expression::parse("200*x*y").eval2("x", 0.5, "y", 0.2) == doctest::Approx(20.0));
  CHECK(Expression::parse("1/p").eval1("p", 4.0) == 0.25);

  CHECK_THROWS_AS(Expression::parse("1+"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("t^x"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("(1"), std::invalid_argument);
  CHECK_THROWS_AS(Expression::parse("2*x").eval1("t", 1.0), std::invalid_argument);

  auto vars = Expression::parse("x*t + x").variables();
  CHECK(vars.size() == 2);
}

TEST_CASE("tabulated functions interpolate piecewise linearly") {
  auto f = ScalarFn::table(Eigen::Vector3d(0, 0.5, 1.0), Eigen::Vector3d(0, 1.0, 0.5));
  CHECK(f.eval(0.25) == doctest::Approx(0.5));
  CHECK(f.eval(0.75) == doctest::Approx(0.75));
  CHECK(f.eval(-1) == 0.0);  // clamped
  CHECK(f.eval(2) == 0.5);
  CHECK_THROWS(ScalarFn::table(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)));
}

TEST_CASE("time quadrature is exact on piecewise polynomials") {
  auto grid = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::LinSpaced(6, 0.0, 1.0));
  Eigen::VectorXd vals(6);
  for (int i = 0; i < 6; ++i) vals[i] = (*grid)[i];  // lambda(t) = t
  TimeFn lam = TimeFn::nodal(grid, vals);
  TimeFn one = TimeFn::from_fn(ScalarFn::constant(1.0));
  CHECK(integrate_time({&lam}, 0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(integrate_time({&lam, &lam}, 0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(integrate_time({&lam, &lam, &lam}, 0, 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(integrate_time({&one}, 0, 1) == doctest::Approx(1.0));

  TimeFn dl = TimeFn::nodal_deriv(grid, vals);
  CHECK(integrate_time({&dl, &lam}, 0, 1) == doctest::Approx(0.5).epsilon(1e-14));

  // reversed pairing: int t * (T - t) dt on [0,1]
  CHECK(integrate_time_reversed(lam, lam, 0, 1) == doctest::Approx(1.0 / 6).epsilon(1e-13));
}
