// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_FEM_HPP
#define PGDCERT_FEM_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <memory>
#include <vector>

#include "pgdcert/field.hpp"
#include "pgdcert/mesh.hpp"
#include "pgdcert/problem.hpp"
#include "pgdcert/time_fn.hpp"

namespace pgdcert {

/// Space densities of one load term materialized on a concrete mesh as
/// element polynomials (so that assembly and flux equilibration see the
/// exact same data).
struct LoadData {
  ElementScalarPoly body;             // may be zero
  ElementPolyField gradient;          // gradient-tested density, may be zero
  struct EdgeFlux {
    int boundary_index;               // into mesh.boundary
    Eigen::Vector3d g;                // g(s) = g0 + g1 s + g2 s^2, s in [0,1] along the edge
  };
  std::vector<EdgeFlux> edges;
  bool has_gradient = false;
};

/// Space matrices and load vectors on the free dofs of one mesh.
/// Hanging-node constraints and Dirichlet rows are condensed away through
/// the prolongation P (nodal = P * free).
struct SpaceOperators {
  std::shared_ptr<const SpaceMesh> mesh;
  Eigen::SparseMatrix<double> M;  // mass, free x free
  Eigen::SparseMatrix<double> K;  // unit-diffusion stiffness, free x free
  Eigen::SparseMatrix<double> P;  // nodes x free
  std::vector<Eigen::VectorXd> F;  // one per load term, free dofs
  std::vector<LoadData> load_data;
  std::vector<int> free_index;     // node -> free dof or -1
  int n_free = 0;

  Eigen::VectorXd to_nodal(const Eigen::VectorXd& free) const { return P * free; }
  Eigen::VectorXd restrict_nodal(const Eigen::VectorXd& nodal) const {
    return P.transpose() * nodal;
  }
};

SpaceOperators assemble(std::shared_ptr<const SpaceMesh> mesh, const ProblemSpec& spec);

/// Direct solve of (a M + b K) x = rhs on the free dofs; requires the
/// combination to be positive definite (a >= 0, b > 0 or a > 0, b >= 0).
Eigen::VectorXd solve_space_system(const SpaceOperators& ops, double a, double b,
                                   const Eigen::VectorXd& rhs);

/// Continuous piecewise-linear-in-time Galerkin solve of the scalar ODE
/// a u' + b u = f on the grid, u(0) = 0 (interval-constant test space,
/// i.e. the standard cG(1) marching scheme). With a = 0 the problem is
/// algebraic and degenerates to the unconstrained L2 projection of f/b.
Eigen::VectorXd solve_time_ode(const TimeGrid& grid, double a, double b, const TimeFn& forcing);

/// Full-order space-time solution at a fixed parameter point.
struct SpaceTimeField {
  std::shared_ptr<const SpaceMesh> mesh;
  std::shared_ptr<const TimeGrid> grid;
  Eigen::MatrixXd values;  // n_nodes x n_time_nodes, column 0 zero
};

SpaceTimeField reference_solve(const ProblemSpec& spec, const Eigen::VectorXd& p,
                               std::shared_ptr<const SpaceMesh> mesh,
                               std::shared_ptr<const TimeGrid> grid);

/// Residual of a discrete space-time field against the cG(1) scheme,
/// relative to the load scale (diagnostic for the oracle).
double discrete_residual_norm(const ProblemSpec& spec, const Eigen::VectorXd& p,
                              const SpaceOperators& ops, const TimeGrid& grid,
                              const SpaceTimeField& u);

/// Space-time energy norm squared of a nodal trajectory E:
/// int_I (k |grad e|^2 + r e^2) dt + c ||e(T)||^2, coefficients at p.
double energy_norm_sq(const ProblemSpec& spec, const Eigen::VectorXd& p, const SpaceOperators& ops,
                      const TimeGrid& grid, const Eigen::MatrixXd& nodal_trajectory);

}  // namespace pgdcert

#endif
