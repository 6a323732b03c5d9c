// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pgdcert/problem.hpp"

using namespace pgdcert;

namespace {
std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}
}  // namespace

TEST_CASE("beam case parses to two load terms and one axis") {
  const ProblemSpec spec = parse_problem(read_file(CASES_DIR "/beam1d.json"));
  CHECK(spec.dim() == 1);
  CHECK(spec.loads.size() == 2);
  CHECK(spec.parameters.size() == 1);
  CHECK(spec.horizon == 1.0);
  CHECK_FALSE(spec.steady);
  // open-at-zero axis: grid starts at 0.01 * p_max
  CHECK(spec.parameters[0].grid[0] == doctest::Approx(1.0));
  CHECK(spec.parameters[0].grid[99] == doctest::Approx(100.0));
  CHECK(spec.loads[1].alpha.eval(0.5) == doctest::Approx(0.5));
  CHECK(spec.loads[1].body.eval1("x", 0.25) == doctest::Approx(0.5));
}

TEST_CASE("thermal 2D case validates") {
  const ProblemSpec spec = parse_problem(read_file(CASES_DIR "/thermal2d.json"));
  CHECK(spec.dim() == 2);
  CHECK(spec.parameters.size() == 2);
  CHECK(spec.loads.size() == 1);
  CHECK(spec.loads[0].flux.has_value());
  CHECK(spec.loads[0].flux->g.eval2("x", 0.2, "y", 0.4) == doctest::Approx(-1.0));
  CHECK(spec.qoi.has_value());
  CHECK(spec.qoi->terminal);
  Eigen::Vector2d p(2.0, 3.0);
  CHECK(spec.coeff_k.eval(p) == doctest::Approx(2.0));
  CHECK(spec.coeff_c.eval(p) == doctest::Approx(3.0));
}

TEST_CASE("empty loads are a valid zero problem") {
  const ProblemSpec spec = parse_problem(read_file(CASES_DIR "/empty.json"));
  CHECK(spec.loads.empty());
}

TEST_CASE("missing Dirichlet part is a named semantic error") {
  std::string text = R"({
    "domain": {"kind": "interval", "length": 1.0},
    "time": {"horizon": 1.0},
    "dirichlet": [],
    "neumann": ["left", "right"],
    "coefficients": {"c": 1, "k": 1, "r": 0},
    "loads": [{"alpha": 1, "f": 1}],
    "parameters": []
  })";
  CHECK_THROWS_WITH_AS(parse_problem(text), doctest::Contains("no Dirichlet boundary"),
                       std::invalid_argument);
}

TEST_CASE("nonpositive diffusion grid point is rejected") {
  std::string text = R"({
    "domain": {"kind": "interval", "length": 1.0},
    "time": {"horizon": 1.0},
    "dirichlet": ["left", "right"],
    "neumann": [],
    "coefficients": {"c": 1, "k": {"base": 1, "factors": [{"axis": "k", "expr": "p"}]}, "r": 0},
    "loads": [{"alpha": 1, "f": 1}],
    "parameters": [{"name": "k", "min": 0.0, "max": 10.0, "count": 5}]
  })";
  CHECK_THROWS_WITH_AS(parse_problem(text), doctest::Contains("must be positive"),
                       std::invalid_argument);
}

TEST_CASE("steady problem needs no evolution coefficient") {
  std::string text = R"({
    "domain": {"kind": "interval", "length": 1.0},
    "time": {"steady": true},
    "dirichlet": ["left", "right"],
    "neumann": [],
    "coefficients": {"c": 0, "k": 1, "r": 0},
    "loads": [{"alpha": 1, "f": 1}],
    "parameters": []
  })";
  CHECK_NOTHROW(parse_problem(text));
}

TEST_CASE("syntax errors carry a position") {
  CHECK_THROWS_WITH_AS(parse_problem("{\"domain\": }"), doctest::Contains("syntax error"),
                       std::invalid_argument);
}

TEST_CASE("parse then serialize round-trips") {
  for (const char* name : {"/beam1d.json", "/thermal2d.json", "/empty.json"}) {
    const ProblemSpec spec = parse_problem(read_file(std::string(CASES_DIR) + name));
    const std::string once = serialize_problem(spec);
    const std::string twice = serialize_problem(parse_problem(once));
    CHECK(once == twice);
  }
}

TEST_CASE("coefficients evaluate finite and sign-correct on the full grid") {
  const ProblemSpec spec = parse_problem(read_file(CASES_DIR "/thermal2d.json"));
  for (int i = 0; i < spec.parameters[0].grid.size(); i += 7)
    for (int j = 0; j < spec.parameters[1].grid.size(); j += 7) {
      Eigen::Vector2d p(spec.parameters[0].grid[i], spec.parameters[1].grid[j]);
      CHECK(spec.coeff_k.eval(p) > 0);
      CHECK(spec.coeff_c.eval(p) > 0);
      CHECK(spec.coeff_r.eval(p) >= 0);
    }
}
