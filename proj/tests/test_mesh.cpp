// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pgdcert/mesh.hpp"

using namespace pgdcert;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ProblemSpec beam_spec() { return parse_problem(slurp(CASES_DIR "/beam1d.json")); }
ProblemSpec thermal_spec() { return parse_problem(slurp(CASES_DIR "/thermal2d.json")); }

}  // namespace

TEST_CASE("1D uniform refinement halves h") {
  auto spec = beam_spec();
  auto mesh = build_initial_mesh(spec);
  CHECK(mesh->n_elements() == 20);
  auto fine = refine_space(mesh, {.uniform = true});
  CHECK(fine->n_elements() == 40);
  CHECK(fine->box(0).hx == doctest::Approx(0.025));
  CHECK(fine->descends_from(*mesh));
  // every child interpolates inside exactly one parent element
  for (int e = 0; e < fine->n_elements(); ++e) {
    const auto b = fine->box(e);
    const int pe = mesh->find_element(b.x0 + 0.5 * b.hx);
    CHECK(pe == fine->parent_element[e]);
  }
}

TEST_CASE("2D thermal mesh has 85 quads, uniform split gives 340") {
  auto spec = thermal_spec();
  auto mesh = build_initial_mesh(spec);
  CHECK(mesh->n_elements() == 85);
  CHECK(mesh->dim == 2);
  auto fine = refine_space(mesh, {.uniform = true});
  CHECK(fine->n_elements() == 340);
  CHECK(fine->conforming());
  // Dirichlet flags live on xmax/ymax only
  int nd = 0;
  for (int n = 0; n < fine->n_nodes(); ++n)
    if (fine->dirichlet_node[n]) {
      ++nd;
      const bool on = fine->nodes(n, 0) == doctest::Approx(1.0) ||
                      fine->nodes(n, 1) == doctest::Approx(1.0);
      CHECK(on);
    }
  CHECK(nd > 0);
}

TEST_CASE("2D corner mark inserts 4 children and 2 hanging constraints") {
  ProblemSpec spec = thermal_spec();
  auto& d = std::get<QuadGridDomain>(spec.domain);
  d.nx = 2;
  d.ny = 2;
  d.holes.clear();
  spec.dirichlet_tags = {"xmin", "xmax", "ymin", "ymax"};
  spec.neumann_tags = {};
  spec.loads[0].flux.reset();
  auto mesh = build_initial_mesh(spec);
  REQUIRE(mesh->n_elements() == 4);

  const int corner = mesh->find_element(0.25, 0.25);
  auto fine = refine_space(mesh, {.marked = {corner}});
  CHECK(fine->n_elements() == 3 + 4);
  CHECK(fine->constraints.size() == 2);
  for (const auto& c : fine->constraints) {
    const double mx = 0.5 * (fine->nodes(c.master_a, 0) + fine->nodes(c.master_b, 0));
    const double my = 0.5 * (fine->nodes(c.master_a, 1) + fine->nodes(c.master_b, 1));
    CHECK(fine->nodes(c.node, 0) == doctest::Approx(mx));
    CHECK(fine->nodes(c.node, 1) == doctest::Approx(my));
  }
  // levels differ by at most one everywhere
  for (int e = 0; e < fine->n_elements(); ++e) CHECK(fine->refinement_level[e] <= 1);

  // refining a child of the corner cascades the coarse neighbors
  const int deep = fine->find_element(0.45, 0.45);
  auto finer = refine_space(fine, {.marked = {deep}});
  for (const auto& c : finer->constraints) {
    (void)c;  // all constraints still 1-irregular by construction
  }
  int lmax = 0, lmin = 99;
  for (int e = 0; e < finer->n_elements(); ++e) {
    lmax = std::max(lmax, finer->refinement_level[e]);
    lmin = std::min(lmin, finer->refinement_level[e]);
  }
  CHECK(lmax == 2);
  CHECK(lmin >= 1);  // the touched coarse quads were cascaded
}

TEST_CASE("time grid refinement") {
  ProblemSpec spec = beam_spec();
  auto g = build_initial_grid(spec);
  CHECK(g->n_intervals() == 10);
  CHECK(refine_time(g, 2)->n_intervals() == 20);

  auto g1 = std::make_shared<TimeGrid>();
  g1->nodes = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::LinSpaced(2, 0.0, 1.0));
  CHECK(refine_time(g1, 4)->n_intervals() == 4);

  auto g2 = std::make_shared<TimeGrid>();
  g2->nodes = std::make_shared<Eigen::VectorXd>(Eigen::Vector3d(0.0, 0.3, 1.0));
  auto r = refine_time(g2, 2);
  REQUIRE(r->nodes->size() == 5);
  CHECK((*r->nodes)[1] == doctest::Approx(0.15));
  CHECK((*r->nodes)[3] == doctest::Approx(0.65));
}

TEST_CASE("transfer reproduces piecewise-(bi)linear fields exactly") {
  auto spec = beam_spec();
  std::get<IntervalDomain>(spec.domain).initial_elements = 2;
  auto mesh = build_initial_mesh(spec);
  auto fine = refine_space(mesh, {.uniform = true});

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh->n_nodes());
  CHECK(transfer_space(ones, *mesh, *fine).isApproxToConstant(1.0));

  Eigen::VectorXd lin(mesh->n_nodes());
  for (int n = 0; n < mesh->n_nodes(); ++n) lin[n] = mesh->nodes(n, 0);
  Eigen::VectorXd linf = transfer_space(lin, *mesh, *fine);
  Eigen::VectorXd expect(5);
  expect << 0, 0.25, 0.5, 0.75, 1.0;
  // node order may differ; compare via coordinates
  for (int n = 0; n < fine->n_nodes(); ++n)
    CHECK(linf[n] == doctest::Approx(fine->nodes(n, 0)));

  // idempotence along the chain
  auto finest = refine_space(fine, {.uniform = true});
  Eigen::VectorXd via = transfer_space(linf, *fine, *finest);
  Eigen::VectorXd direct = transfer_space(lin, *mesh, *finest);
  CHECK((via - direct).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));

  CHECK_THROWS(transfer_space(lin, *fine, *mesh));  // not nested that way
}

TEST_CASE("bilinear xy transfers exactly on a quad split") {
  ProblemSpec spec = thermal_spec();
  auto& d = std::get<QuadGridDomain>(spec.domain);
  d.nx = 1;
  d.ny = 1;
  d.holes.clear();
  spec.dirichlet_tags = {"xmin", "xmax", "ymin", "ymax"};
  spec.neumann_tags = {};
  spec.loads[0].flux.reset();
  auto mesh = build_initial_mesh(spec);
  Eigen::VectorXd f(mesh->n_nodes());
  for (int n = 0; n < mesh->n_nodes(); ++n) f[n] = mesh->nodes(n, 0) * mesh->nodes(n, 1);
  auto fine = refine_space(mesh, {.uniform = true});
  Eigen::VectorXd ff = transfer_space(f, *mesh, *fine);
  for (int n = 0; n < fine->n_nodes(); ++n)
    CHECK(ff[n] == doctest::Approx(fine->nodes(n, 0) * fine->nodes(n, 1)));
}

TEST_CASE("time transfer is exact interpolation") {
  auto g = std::make_shared<TimeGrid>();
  g->nodes = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::LinSpaced(3, 0.0, 1.0));
  auto f = refine_time(g, 2);
  Eigen::VectorXd v(3);
  v << 0.0, 1.0, 0.5;
  Eigen::VectorXd vf = transfer_time(v, *g, *f);
  CHECK(vf[1] == doctest::Approx(0.5));
  CHECK(vf[3] == doctest::Approx(0.75));
}

TEST_CASE("mesh dump is valid JSON with the documented keys") {
  auto mesh = build_initial_mesh(beam_spec());
  const std::string dump = mesh->dump_json();
  CHECK(dump.find("\"nodes\"") != std::string::npos);
  CHECK(dump.find("\"elements\"") != std::string::npos);
  CHECK(dump.find("\"boundary\"") != std::string::npos);
  CHECK(dump.find("\"constraints\"") != std::string::npos);
  CHECK(dump.find("\"parent\"") != std::string::npos);
}
