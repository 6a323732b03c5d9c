// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pgdcert/pgd.hpp"

using namespace pgdcert;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::shared_ptr<const ProblemSpec> beam_spec() {
  return std::make_shared<ProblemSpec>(parse_problem(slurp(CASES_DIR "/beam1d.json")));
}

// steady 1D, f = 1, diffusion k in [1,10]: exact solution x(1-x)/(2k) is
// rank-one in the separated sense
std::shared_ptr<const ProblemSpec> rank1_spec() {
  const char* text = R"({
    "domain": {"kind": "interval", "length": 1.0, "elements": 20},
    "time": {"steady": true},
    "dirichlet": ["left", "right"],
    "neumann": [],
    "coefficients": {"c": 0, "k": {"base": 1, "factors": [{"axis": "k", "expr": "p"}]}, "r": 0},
    "loads": [{"alpha": 1, "f": 1}],
    "parameters": [{"name": "k", "min": 1.0, "max": 10.0, "count": 50}],
    "solver": {"m_max": 3, "k_max": 4, "seed": 42}
  })";
  return std::make_shared<ProblemSpec>(parse_problem(text));
}

double mode_l2_time(const Mode& mode) {
  return grid_l2_norm(*mode.grid->nodes, mode.lam);
}

}  // namespace

TEST_CASE("rank-1 separable steady problem is captured by one mode") {
  auto spec = rank1_spec();
  auto sol = run_pgd(spec, 3);
  // zero-residual termination after the first mode
  CHECK(sol.rank() == 1);

  const auto& mode = sol.modes[0];
  const auto& g = spec->parameters[0].grid;
  // gamma ~ 1/k: the product k * gamma(k) is constant across the grid
  const double ref = g[0] * mode.gammas[0][0];
  for (int q = 0; q < g.size(); ++q)
    CHECK(g[q] * mode.gammas[0][q] == doctest::Approx(ref).epsilon(1e-10));
  // normalization invariant
  CHECK(grid_l2_norm(g, mode.gammas[0]) == doctest::Approx(1.0).epsilon(1e-12));

  // evaluation at a parameter grid point matches the exact solution at
  // space nodes (P1 nodally exact; between grid points the parameter
  // factor interpolates linearly by design)
  Eigen::VectorXd p(1);
  p << g[16];
  for (double x : {0.25, 0.5, 0.75})
    CHECK(evaluate(sol, x, 0, 0, p) ==
          doctest::Approx(x * (1 - x) / (2 * g[16])).epsilon(1e-9));

  // residual after the one mode is at machine level
  GramCache cache = build_cache(spec, sol.modes[0].mesh, sol.modes[0].grid, sol);
  const double r1 = residual_tensor_norm(cache);
  SeparatedSolution empty;
  empty.problem = spec;
  GramCache cache0 = build_cache(spec, sol.modes[0].mesh, sol.modes[0].grid, empty);
  const double r0 = residual_tensor_norm(cache0);
  CHECK(r1 <= 1e-10 * r0);
}

TEST_CASE("zero loading terminates before any sub-iteration") {
  auto spec = std::make_shared<ProblemSpec>(parse_problem(slurp(CASES_DIR "/empty.json")));
  auto sol = run_pgd(spec, 3);
  CHECK(sol.rank() == 0);
  CHECK_THROWS_AS(run_pgd(spec, 0), std::invalid_argument);
}

TEST_CASE("beam problem: invariants of every computed mode") {
  auto spec = beam_spec();
  auto sol = run_pgd(spec, 5);
  REQUIRE(sol.rank() == 5);
  for (const auto& mode : sol.modes) {
    CHECK(mode.lam[0] == 0.0);  // zero initial condition
    CHECK(mode_l2_time(mode) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(grid_l2_norm(spec->parameters[0].grid, mode.gammas[0]) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // Dirichlet ends vanish
    CHECK(mode.psi[0] == 0.0);
    CHECK(mode.psi[mode.mesh->n_nodes() - 1] == 0.0);
  }
  // first space profile: a single interior bump, positive after sign fix
  const auto& psi = sol.modes[0].psi;
  const double sign = psi[10] > 0 ? 1.0 : -1.0;
  int sign_changes = 0;
  for (int n = 1; n + 1 < psi.size(); ++n)
    if ((sign * psi[n]) * (sign * psi[n + 1]) < 0) ++sign_changes;
  CHECK(sign_changes == 0);
  // evaluation at t = 0 vanishes
  Eigen::VectorXd p(1);
  p << 2.07;
  CHECK(evaluate(sol, 0.37, 0, 0.0, p) == doctest::Approx(0.0));
}

TEST_CASE("space Galerkin property holds for every mode after the run") {
  auto spec = beam_spec();
  auto sol = run_pgd(spec, 4);
  GramCache cache = build_cache(spec, sol.modes[0].mesh, sol.modes[0].grid, sol);
  for (int m0 = 0; m0 < sol.rank(); ++m0)
    CHECK(space_property_residual(cache, m0) <= 1e-10);
}

TEST_CASE("weak residual is monotone in the rank") {
  auto spec = beam_spec();
  auto mesh = build_initial_mesh(*spec);
  auto grid = build_initial_grid(*spec);
  SeparatedSolution sol;
  sol.problem = spec;
  sol.current_mesh = mesh;
  sol.current_grid = grid;
  GramCache cache = build_cache(spec, mesh, grid, sol);
  double prev = residual_tensor_norm(cache);
  for (int m = 1; m <= 5; ++m) {
    auto mode = compute_next_mode(cache, sol, spec->solver.k_max);
    REQUIRE(mode.has_value());
    sol.modes.push_back(std::move(*mode));
    cache_append_mode(cache, sol.modes.back());
    const double now = residual_tensor_norm(cache);
    CHECK(now <= prev * 1.01);
    prev = now;
  }
}

TEST_CASE("gram cache entries match direct quadrature") {
  auto spec = beam_spec();
  auto sol = run_pgd(spec, 3);
  GramCache cache = build_cache(spec, sol.modes[0].mesh, sol.modes[0].grid, sol);
  // time pair 0-1 recomputed with dense sampling of the closed forms
  const Eigen::VectorXd& t = *cache.grid->nodes;
  double ll = 0;
  const int NQ = 2000;
  TimeFn l0 = TimeFn::nodal(cache.grid->nodes, cache.lam.col(0));
  TimeFn l1 = TimeFn::nodal(cache.grid->nodes, cache.lam.col(1));
  for (int q = 0; q < NQ; ++q) {
    const double tq = (q + 0.5) / NQ * t[t.size() - 1];
    ll += l0.eval(tq) * l1.eval(tq) / NQ;
  }
  CHECK(cache.lam_lam(0, 1) == doctest::Approx(ll).epsilon(1e-4));  // sampling error only
  // parameter Gram against the exact separated formula on a subinterval
  const auto& g = spec->parameters[0].grid;
  const Eigen::VectorXd g0 = cache.axes[0].gamma.col(0);
  const double direct = grid_product_integral(g, {&g0, &g0});
  CHECK(direct == doctest::Approx(1.0).epsilon(1e-12));  // normalized
}

TEST_CASE("evaluate: single hat mode reproduces its nodal value") {
  auto spec = rank1_spec();
  auto mesh = build_initial_mesh(*spec);
  auto grid = build_initial_grid(*spec);
  SeparatedSolution sol;
  sol.problem = spec;
  Mode mode;
  mode.mesh = mesh;
  mode.grid = grid;
  mode.psi = Eigen::VectorXd::Zero(mesh->n_nodes());
  mode.psi[7] = 3.25;
  const auto& g = spec->parameters[0].grid;
  mode.gammas = {Eigen::VectorXd::Ones(g.size())};
  sol.modes.push_back(mode);
  Eigen::VectorXd p(1);
  p << 2.0;
  CHECK(evaluate(sol, mesh->nodes(7, 0), 0, 0, p) == doctest::Approx(3.25));
  CHECK_THROWS_AS(evaluate(sol, 2.5, 0, 0, p), std::out_of_range);

  // rank-2 evaluation equals an independently computed sum of products
  Mode mode2 = mode;
  mode2.psi = Eigen::VectorXd::Constant(mesh->n_nodes(), 0.5);
  mode2.gammas = {Eigen::VectorXd::LinSpaced(g.size(), 1.0, 2.0)};
  sol.modes.push_back(mode2);
  const double x = 0.33;
  double expect = 0.0;
  {
    // mode 1: hat at node 7
    const double x7 = mesh->nodes(7, 0);
    const double h = 0.05;
    const double hat = std::max(0.0, 1.0 - std::abs(x - x7) / h);
    expect += 3.25 * hat * 1.0;
    // mode 2: constant 0.5 times gamma(2.0)
    const double gl = 1.0 + (2.0 - g[0]) / (g[g.size() - 1] - g[0]);
    expect += 0.5 * gl;
  }
  CHECK(evaluate(sol, x, 0, 0, p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("solution dump lists per-mode arrays") {
  auto spec = rank1_spec();
  auto sol = run_pgd(spec, 1);
  const std::string dump = dump_solution_json(sol);
  CHECK(dump.find("\"psi\"") != std::string::npos);
  CHECK(dump.find("\"gamma_k\"") != std::string::npos);
}
