// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pgdcert/fem.hpp"

using namespace pgdcert;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ProblemSpec beam_spec() { return parse_problem(slurp(CASES_DIR "/beam1d.json")); }

ProblemSpec unit_poisson_1d(int elements) {
  std::ostringstream os;
  os << R"({
    "domain": {"kind": "interval", "length": 1.0, "elements": )"
     << elements << R"(},
    "time": {"steady": true},
    "dirichlet": ["left", "right"],
    "neumann": [],
    "coefficients": {"c": 0, "k": 1, "r": 0},
    "loads": [{"alpha": 1, "f": 1}],
    "parameters": []
  })";
  return parse_problem(os.str());
}

}  // namespace

TEST_CASE("hand-assembled 1D stiffness and load") {
  auto spec = unit_poisson_1d(2);
  auto mesh = build_initial_mesh(spec);
  auto ops = assemble(mesh, spec);
  REQUIRE(ops.n_free == 1);  // only the middle node is free
  // K row for the middle node of two h=0.5 bars is [-2, 4, -2]; after
  // Dirichlet elimination only the diagonal 4 remains
  CHECK(ops.K.coeff(0, 0) == doctest::Approx(4.0));
  CHECK(ops.F[0][0] == doctest::Approx(0.5));  // f = 1 against the interior hat
  CHECK(ops.M.coeff(0, 0) == doctest::Approx(2.0 * 0.5 / 3.0));
}

TEST_CASE("symmetry of assembled operators") {
  auto spec = parse_problem(slurp(CASES_DIR "/thermal2d.json"));
  auto mesh = build_initial_mesh(spec);
  auto ops = assemble(mesh, spec);
  Eigen::SparseMatrix<double> Kt = ops.K.transpose();
  Eigen::SparseMatrix<double> Mt = ops.M.transpose();
  CHECK((ops.K - Kt).norm() == 0.0);
  CHECK((ops.M - Mt).norm() == 0.0);
}

TEST_CASE("all-Dirichlet mesh yields an empty system") {
  auto spec = unit_poisson_1d(1);
  auto mesh = build_initial_mesh(spec);
  auto ops = assemble(mesh, spec);
  CHECK(ops.n_free == 0);
  CHECK(solve_space_system(ops, 0, 1, Eigen::VectorXd()).size() == 0);
}

TEST_CASE("P1 solve of -u'' = 1 is nodally exact") {
  auto spec = unit_poisson_1d(20);
  auto mesh = build_initial_mesh(spec);
  auto ops = assemble(mesh, spec);
  Eigen::VectorXd u = ops.to_nodal(solve_space_system(ops, 0.0, 1.0, ops.F[0]));
  for (int n = 0; n < mesh->n_nodes(); ++n) {
    const double x = mesh->nodes(n, 0);
    CHECK(u[n] == doctest::Approx(x * (1 - x) / 2).epsilon(1e-12));
  }
  CHECK(solve_space_system(ops, 0, 1, Eigen::VectorXd::Zero(ops.n_free)).norm() == 0.0);
  CHECK_THROWS_AS(solve_space_system(ops, 0.0, 0.0, ops.F[0]), std::invalid_argument);
}

TEST_CASE("mass solve matches a dense factorization") {
  auto spec = unit_poisson_1d(4);  // 5 nodes, 3 free
  auto mesh = build_initial_mesh(spec);
  auto ops = assemble(mesh, spec);
  Eigen::VectorXd rhs(ops.n_free);
  rhs << 1.0, -2.0, 0.5;
  Eigen::VectorXd x = solve_space_system(ops, 1.0, 0.0, rhs);
  Eigen::MatrixXd Md = Eigen::MatrixXd(ops.M);
  Eigen::VectorXd xd = Md.fullPivLu().solve(rhs);
  CHECK((x - xd).norm() <= 1e-12 * xd.norm());
}

TEST_CASE("time solver reproduces the stated identities") {
  auto g = std::make_shared<TimeGrid>();
  g->nodes = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::LinSpaced(11, 0.0, 1.0));
  TimeFn one = TimeFn::from_fn(ScalarFn::constant(1.0));

  SUBCASE("a=0, b=1, f=1: lambda is one at interior and final nodes") {
    Eigen::VectorXd lam = solve_time_ode(*g, 0.0, 1.0, one);
    for (int n = 1; n <= 10; ++n) CHECK(lam[n] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a=1, b=0, f=1: lambda(t_n) = t_n exactly") {
    Eigen::VectorXd lam = solve_time_ode(*g, 1.0, 0.0, one);
    for (int n = 0; n <= 10; ++n) CHECK(lam[n] == doctest::Approx((*g->nodes)[n]).epsilon(1e-13));
  }
  SUBCASE("a=b=0 is rejected") { CHECK_THROWS_AS(solve_time_ode(*g, 0, 0, one), std::invalid_argument); }
}

TEST_CASE("time solver converges at second order") {
  TimeFn one = TimeFn::from_fn(ScalarFn::constant(1.0));
  auto err = [&](int n) {
    auto g = std::make_shared<TimeGrid>();
    g->nodes = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::LinSpaced(n + 1, 0.0, 1.0));
    Eigen::VectorXd lam = solve_time_ode(*g, 1.0, 1.0, one);
    double e = 0;
    for (int i = 0; i <= n; ++i)
      e = std::max(e, std::abs(lam[i] - (1.0 - std::exp(-(*g->nodes)[i]))));
    return e;
  };
  const double e10 = err(10), e20 = err(20);
  CHECK(e10 / e20 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("steady oracle: x(1-x)/(2k)") {
  auto spec = unit_poisson_1d(20);
  spec.coeff_k.base = 4.0;
  auto mesh = build_initial_mesh(spec);
  auto grid = build_initial_grid(spec);
  auto u = reference_solve(spec, Eigen::VectorXd(), mesh, grid);
  for (int n = 0; n < mesh->n_nodes(); ++n) {
    const double x = mesh->nodes(n, 0);
    CHECK(u.values(n, 0) == doctest::Approx(x * (1 - x) / 8).epsilon(1e-12));
  }
}

TEST_CASE("zero loading gives the zero field") {
  auto spec = beam_spec();
  spec.loads.clear();
  auto mesh = build_initial_mesh(spec);
  auto grid = build_initial_grid(spec);
  Eigen::VectorXd p(1);
  p << 2.0;
  auto u = reference_solve(spec, p, mesh, grid);
  CHECK(u.values.norm() == 0.0);
}

TEST_CASE("oracle satisfies its own discrete residual") {
  auto spec = beam_spec();
  auto mesh = build_initial_mesh(spec);
  auto grid = build_initial_grid(spec);
  Eigen::VectorXd p(1);
  p << 2.07;
  auto u = reference_solve(spec, p, mesh, grid);
  CHECK(u.values.col(0).norm() == 0.0);  // zero initial condition
  auto ops = assemble(mesh, spec);
  CHECK(discrete_residual_norm(spec, p, ops, *grid, u) <= 1e-10);
}

TEST_CASE("energy norm of a known field") {
  // steady: ||u||_k^2 with u = x on [0,1], k = 1 -> 1
  auto spec = unit_poisson_1d(10);
  spec.dirichlet_tags = {"left"};
  spec.neumann_tags = {"right"};
  auto mesh = build_initial_mesh(spec);
  auto grid = build_initial_grid(spec);
  auto ops = assemble(mesh, spec);
  Eigen::MatrixXd traj(mesh->n_nodes(), 1);
  for (int n = 0; n < mesh->n_nodes(); ++n) traj(n, 0) = mesh->nodes(n, 0);
  CHECK(energy_norm_sq(spec, Eigen::VectorXd(), ops, *grid, traj) == doctest::Approx(1.0));
}
