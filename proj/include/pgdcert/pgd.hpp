// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_PGD_HPP
#define PGDCERT_PGD_HPP

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <vector>

#include "pgdcert/fem.hpp"
#include "pgdcert/mesh.hpp"
#include "pgdcert/problem.hpp"

namespace pgdcert {

/// Exact integral over an axis grid of the product of piecewise-linear
/// tabulated functions (up to cubic integrands per interval).
double grid_product_integral(const Eigen::VectorXd& x,
                             std::initializer_list<const Eigen::VectorXd*> fs);
double grid_l2_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& v);

/// One rank-one term psi(x) * lam(t) * prod_j gamma_j(p_j). Time and
/// parameter factors are unit L2; the magnitude sits in psi. Steady
/// problems carry no time factor (lam empty).
struct Mode {
  Eigen::VectorXd psi;  // nodal, zero on Dirichlet nodes
  std::shared_ptr<const SpaceMesh> mesh;
  Eigen::VectorXd lam;  // nodal on grid, lam(0) = 0
  std::shared_ptr<const TimeGrid> grid;
  std::vector<Eigen::VectorXd> gammas;  // one per parameter axis, on axis grids
};

struct SeparatedSolution {
  std::shared_ptr<const ProblemSpec> problem;
  std::vector<Mode> modes;
  std::shared_ptr<const SpaceMesh> current_mesh;
  std::shared_ptr<const TimeGrid> current_grid;
  double first_mode_energy = 0.0;  // psi' K psi of mode 1, termination scale

  int rank() const { return static_cast<int>(modes.size()); }
};

/// Pairwise separated integrals between modes, loads and coefficient
/// factors on the current discretization. Modes computed on coarser
/// nested meshes/grids enter through their exact transfers.
struct GramCache {
  std::shared_ptr<const ProblemSpec> spec;
  SpaceOperators ops;
  std::shared_ptr<const TimeGrid> grid;
  int m = 0;

  Eigen::MatrixXd psi_free;          // n_free x m
  Eigen::MatrixXd m_psi, k_psi;      // n_free x m
  Eigen::MatrixXd psi_m_psi, psi_k_psi;  // m x m
  Eigen::MatrixXd psi_f;             // m x S
  Eigen::MatrixXd lam;               // (N+1) x m (transient only)
  Eigen::MatrixXd lam_lam;           // m x m: int lam_i lam_j
  Eigen::MatrixXd dlam_lam;          // m x m: int lam_i' lam_j
  Eigen::MatrixXd alpha_lam;         // S x m: int alpha_s lam_i

  struct AxisCache {
    Eigen::VectorXd c_vals, k_vals, r_vals;  // coefficient factors on the grid
    Eigen::MatrixXd beta_vals;               // S x grid points
    Eigen::MatrixXd gamma;                   // grid points x m
    Eigen::MatrixXd gc, gk, gr;              // m x m weighted Grams
    Eigen::MatrixXd beta_gamma;              // S x m
  };
  std::vector<AxisCache> axes;

  bool steady() const { return spec->steady; }
  int n_loads() const { return static_cast<int>(spec->loads.size()); }
};

GramCache build_cache(std::shared_ptr<const ProblemSpec> spec,
                      std::shared_ptr<const SpaceMesh> mesh,
                      std::shared_ptr<const TimeGrid> grid, const SeparatedSolution& sol);

void cache_append_mode(GramCache& cache, const Mode& mode);

/// One greedy rank-one correction via exactly k_max alternating rounds
/// (time solve, one parameter update per axis in order, space solve
/// last). Returns nothing when the residual loading is already zero.
std::optional<Mode> compute_next_mode(const GramCache& cache, const SeparatedSolution& sol,
                                      int k_max);

/// Progressive construction on a fixed discretization.
SeparatedSolution run_pgd(std::shared_ptr<const ProblemSpec> spec, int m_max);
SeparatedSolution run_pgd(std::shared_ptr<const ProblemSpec> spec, int m_max,
                          std::shared_ptr<const SpaceMesh> mesh,
                          std::shared_ptr<const TimeGrid> grid);

/// Append modes until rank reaches m_target (cache must match sol).
bool extend_pgd(SeparatedSolution& sol, GramCache& cache, int m_target);

double evaluate(const SeparatedSolution& sol, double x, double y, double t,
                const Eigen::VectorXd& p);

/// Frobenius norm of the discrete weak residual tensor (space test hats
/// x time test hats x parameter grid, L2-weighted along parameters).
double residual_tensor_norm(const GramCache& cache);

/// Residual of the final space solve of mode m0 re-tested against every
/// space basis function of the cache mesh, relative to the load scale.
/// Valid whenever mode m0 lives on the cache's mesh lineage.
double space_property_residual(const GramCache& cache, int m0);

std::string dump_solution_json(const SeparatedSolution& sol);

}  // namespace pgdcert

#endif
