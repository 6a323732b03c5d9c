// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_PROBLEM_HPP
#define PGDCERT_PROBLEM_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pgdcert/expression.hpp"
#include "pgdcert/time_fn.hpp"

namespace pgdcert {

/// 1D interval [0, L].
struct IntervalDomain {
  double length = 1.0;
  int initial_elements = 20;
};

/// Axis-aligned rectangle [0,w] x [0,h] meshed by nx x ny square cells,
/// minus a set of cell-aligned rectangular holes. Boundary tags: xmin,
/// xmax, ymin, ymax, hole0, hole1, ...
struct QuadGridDomain {
  double width = 1.0;
  double height = 1.0;
  int nx = 10;
  int ny = 10;
  struct Hole {
    double x0, y0, x1, y1;
  };
  std::vector<Hole> holes;
};

using Domain = std::variant<IntervalDomain, QuadGridDomain>;

/// One parameter coordinate with its sampling grid.
struct ParameterAxis {
  std::string name;
  double p_min = 0.0;
  double p_max = 1.0;
  bool min_open = false;  // grid then starts at max(p_min, 0.01 * p_max)
  int count = 100;
  Eigen::VectorXd grid;

  void build_grid();
};

/// Spatially uniform coefficient: base * prod_j factor_j(p_j).
struct ParamScalar {
  double base = 0.0;
  struct Factor {
    int axis = -1;
    ScalarFn fn;
  };
  std::vector<Factor> factors;

  bool is_zero() const { return base == 0.0; }
  double eval(const Eigen::VectorXd& p) const;
  // Factor restricted to one axis (identity 1 if the axis is absent).
  double axis_factor(int axis, double pj) const;
};

/// One separated loading term alpha_s(t) * [prod_j beta_sj(p_j)] * L_s(v),
/// where L_s collects a body density, a tagged boundary flux density and
/// (internally, for adjoint loadings) a gradient-tested density.
struct LoadTerm {
  ScalarFn alpha;                      // time factor
  std::vector<ParamScalar::Factor> beta;  // optional parameter factors
  Expression body;                     // f_s(x[,y]); empty if absent
  struct FluxBC {
    std::vector<std::string> tags;
    Expression g;  // g_s on the tagged boundary part
  };
  std::optional<FluxBC> flux;
  struct GradLoad {
    Expression qx, qy;  // gradient-tested density (adjoint extractor)
  };
  std::optional<GradLoad> gradient;
  // Region-indicator body density: constant `body_scale` on the listed
  // coarse elements (used by region-average adjoint loadings).
  std::vector<int> body_region;
  double body_scale = 0.0;

  double beta_eval(const Eigen::VectorXd& p) const;
  double beta_axis_factor(int axis, double pj) const;
  bool has_space_part() const {
    return !body.empty() || flux.has_value() || gradient.has_value() || !body_region.empty();
  }
};

/// Quantity of interest: space extractor x time weight.
struct QoISpec {
  // Space part: either an explicit extraction pair or a region average.
  struct ExtractionPair {
    Expression f_sigma;      // body density (may be empty)
    Expression qx, qy;       // gradient density (may be empty)
  };
  struct RegionAverage {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // union of whole coarse cells
  };
  std::variant<ExtractionPair, RegionAverage> space;
  // Time part: weight on [0,T], or a terminal value mollified over the
  // last time element.
  bool terminal = false;
  ScalarFn time_weight;  // ignored when terminal
};

struct SolverConfig {
  int m_max = 5;
  int k_max = 4;
  unsigned seed = 42;
  int adjoint_extra_modes = 2;  // adjoint order m' = m + this
  int sweep_density = 0;        // 0: default (full grid for <=2 axes, 20/axis for 3)
  int oracle_refine = 4;
};

struct AdaptConfig {
  double alpha = 0.5;       // discretization target = alpha * eta_pgd
  double gamma_tol = 0.0;   // stop when max_p E_CRE <= gamma_tol
  double theta = 0.5;       // Doerfler bulk fraction
  bool local_2d = false;    // quad-tree local refinement (experimental)
  int max_steps = 50;
};

/// Parametrized transient diffusion-reaction problem on a fixed domain.
struct ProblemSpec {
  Domain domain;
  bool steady = false;
  double horizon = 1.0;
  int time_steps = 10;
  std::vector<std::string> dirichlet_tags;
  std::vector<std::string> neumann_tags;
  ParamScalar coeff_c, coeff_k, coeff_r;
  std::vector<LoadTerm> loads;
  std::vector<ParameterAxis> parameters;
  std::optional<QoISpec> qoi;
  SolverConfig solver;
  AdaptConfig adaptivity;

  int dim() const { return std::holds_alternative<IntervalDomain>(domain) ? 1 : 2; }
  int n_axes() const { return static_cast<int>(parameters.size()); }
  int axis_index(const std::string& name) const;
};

/// Parse a problem file. Throws std::invalid_argument with a position on
/// syntax errors and a named invariant on semantic errors.
ProblemSpec parse_problem(const std::string& text);

/// Check every type invariant; returns the spec unchanged on success and
/// throws a single aggregated error otherwise.
const ProblemSpec& validate(const ProblemSpec& spec);

/// Serialize back to the problem-file format (round-trips with parse).
std::string serialize_problem(const ProblemSpec& spec);

}  // namespace pgdcert

#endif
