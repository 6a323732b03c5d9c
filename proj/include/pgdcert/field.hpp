// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_FIELD_HPP
#define PGDCERT_FIELD_HPP

#include <Eigen/Core>
#include <functional>
#include <memory>

#include "pgdcert/mesh.hpp"

namespace pgdcert {

/// Number of scalar monomials per element: {1, xi, xi^2} in 1D and the
/// full quadratic set {1, xi, eta, xi^2, xi*eta, eta^2} in 2D, in local
/// coordinates (xi, eta) in [0,1]^dim.
int poly_basis_size(int dim);

void poly_basis_eval(int dim, double xi, double eta, double* out);
// derivative w.r.t. local xi / eta
void poly_basis_dxi(int dim, double xi, double eta, double* out);
void poly_basis_deta(int dim, double xi, double eta, double* out);

/// Element-wise polynomial scalar density (degree <= 2 per element).
struct ElementScalarPoly {
  std::shared_ptr<const SpaceMesh> mesh;
  Eigen::MatrixXd coef;  // n_elements x basis_size

  double eval(int e, double xi, double eta) const;
  double eval_at(double x, double y) const;
  bool zero() const { return coef.size() == 0 || coef.isZero(0.0); }
};

/// Element-wise polynomial vector field (degree <= 2 components).
struct ElementPolyField {
  std::shared_ptr<const SpaceMesh> mesh;
  // n_elements x (dim * basis_size); component c occupies columns
  // [c*basis, (c+1)*basis)
  Eigen::MatrixXd coef;

  int dim() const { return mesh ? mesh->dim : 0; }
  Eigen::Vector2d eval(int e, double xi, double eta) const;
  Eigen::Vector2d eval_at(double x, double y) const;
  // divergence at a local point (physical scaling applied)
  double divergence(int e, double xi, double eta) const;

  static ElementPolyField zero(std::shared_ptr<const SpaceMesh> mesh);
};

/// Gradient of a piecewise-(bi)linear nodal field as an element poly field.
ElementPolyField gradient_field(std::shared_ptr<const SpaceMesh> mesh,
                                const Eigen::VectorXd& nodal);

/// Element-wise L2 projection of a closed-form density onto the local
/// quadratic space (reproduces polynomials through degree 2 exactly).
ElementScalarPoly project_scalar(std::shared_ptr<const SpaceMesh> mesh,
                                 const std::function<double(double, double)>& f);
ElementPolyField project_vector(std::shared_ptr<const SpaceMesh> mesh,
                                const std::function<Eigen::Vector2d(double, double)>& f);

/// integral over the mesh of F . G; the fields may live on different
/// meshes of one refinement lineage (integration runs on the finer one).
double field_dot(const ElementPolyField& F, const ElementPolyField& G);

/// Per-element restriction of field_dot, reported on `fine` (the finer of
/// the two meshes, which both fields' meshes must be ancestors of).
Eigen::VectorXd field_dot_local(const ElementPolyField& F, const ElementPolyField& G,
                                const SpaceMesh& fine);

/// integral of F . grad(phi_a) for every node a, condensed to free dofs
/// elsewhere; here reported on all nodes of F's mesh.
Eigen::VectorXd field_grad_product(const ElementPolyField& F);

/// Scalar products against nodal hats: integral of f * phi_a per node.
Eigen::VectorXd scalar_node_product(const ElementScalarPoly& f);

double scalar_integral(const ElementScalarPoly& f);

/// 3-point (per direction) Gauss rule on an element, physical weights.
struct ElementQuadrature {
  int n = 0;
  std::array<double, 9> xi, eta, w;  // local points, physical weights
};
ElementQuadrature element_quadrature(const SpaceMesh& mesh, int e);

}  // namespace pgdcert

#endif
