// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/field.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace pgdcert {

namespace {
constexpr double kGX[3] = {0.11270166537925831, 0.5, 0.8872983346207417};
constexpr double kGW[3] = {0.2777777777777778, 0.4444444444444444, 0.2777777777777778};
}  // namespace

int poly_basis_size(int dim) { return dim == 1 ? 3 : 6; }

void poly_basis_eval(int dim, double xi, double eta, double* out) {
  if (dim == 1) {
    out[0] = 1.0;
    out[1] = xi;
    out[2] = xi * xi;
    return;
  }
  out[0] = 1.0;
  out[1] = xi;
  out[2] = eta;
  out[3] = xi * xi;
  out[4] = xi * eta;
  out[5] = eta * eta;
}

void poly_basis_dxi(int dim, double xi, double eta, double* out) {
  if (dim == 1) {
    out[0] = 0.0;
    out[1] = 1.0;
    out[2] = 2.0 * xi;
    return;
  }
  out[0] = 0.0;
  out[1] = 1.0;
  out[2] = 0.0;
  out[3] = 2.0 * xi;
  out[4] = eta;
  out[5] = 0.0;
}

void poly_basis_deta(int dim, double xi, double eta, double* out) {
  (void)dim;
  out[0] = 0.0;
  out[1] = 0.0;
  out[2] = 1.0;
  out[3] = 0.0;
  out[4] = xi;
  out[5] = 2.0 * eta;
}

ElementQuadrature element_quadrature(const SpaceMesh& mesh, int e) {
  ElementQuadrature q;
  const SpaceMesh::Box b = mesh.box(e);
  if (mesh.dim == 1) {
    q.n = 3;
    for (int i = 0; i < 3; ++i) {
      q.xi[i] = kGX[i];
      q.eta[i] = 0.0;
      q.w[i] = kGW[i] * b.hx;
    }
  } else {
    q.n = 9;
    int k = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j, ++k) {
        q.xi[k] = kGX[i];
        q.eta[k] = kGX[j];
        q.w[k] = kGW[i] * kGW[j] * b.hx * b.hy;
      }
  }
  return q;
}

double ElementScalarPoly::eval(int e, double xi, double eta) const {
  double phi[6];
  poly_basis_eval(mesh->dim, xi, eta, phi);
  double v = 0.0;
  for (int b = 0; b < poly_basis_size(mesh->dim); ++b) v += coef(e, b) * phi[b];
  return v;
}

double ElementScalarPoly::eval_at(double x, double y) const {
  const int e = mesh->find_element(x, y);
  const SpaceMesh::Box b = mesh->box(e);
  return eval(e, (x - b.x0) / b.hx, mesh->dim == 2 ? (y - b.y0) / b.hy : 0.0);
}

Eigen::Vector2d ElementPolyField::eval(int e, double xi, double eta) const {
  double phi[6];
  const int nb = poly_basis_size(mesh->dim);
  poly_basis_eval(mesh->dim, xi, eta, phi);
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (int c = 0; c < mesh->dim; ++c)
    for (int b = 0; b < nb; ++b) v[c] += coef(e, c * nb + b) * phi[b];
  return v;
}

Eigen::Vector2d ElementPolyField::eval_at(double x, double y) const {
  const int e = mesh->find_element(x, y);
  const SpaceMesh::Box b = mesh->box(e);
  return eval(e, (x - b.x0) / b.hx, mesh->dim == 2 ? (y - b.y0) / b.hy : 0.0);
}

double ElementPolyField::divergence(int e, double xi, double eta) const {
  const int nb = poly_basis_size(mesh->dim);
  const SpaceMesh::Box b = mesh->box(e);
  double d[6];
  poly_basis_dxi(mesh->dim, xi, eta, d);
  double div = 0.0;
  for (int k = 0; k < nb; ++k) div += coef(e, k) * d[k] / b.hx;
  if (mesh->dim == 2) {
    poly_basis_deta(mesh->dim, xi, eta, d);
    for (int k = 0; k < nb; ++k) div += coef(e, nb + k) * d[k] / b.hy;
  }
  return div;
}

ElementPolyField ElementPolyField::zero(std::shared_ptr<const SpaceMesh> mesh) {
  ElementPolyField f;
  const int nb = poly_basis_size(mesh->dim) * mesh->dim;
  f.coef = Eigen::MatrixXd::Zero(mesh->n_elements(), nb);
  f.mesh = std::move(mesh);
  return f;
}

ElementPolyField gradient_field(std::shared_ptr<const SpaceMesh> mesh,
                                const Eigen::VectorXd& nodal) {
  if (nodal.size() != mesh->n_nodes()) throw std::invalid_argument("nodal field size mismatch");
  ElementPolyField f = ElementPolyField::zero(mesh);
  const int nb = poly_basis_size(mesh->dim);
  for (int e = 0; e < mesh->n_elements(); ++e) {
    const auto& el = mesh->elements[e];
    const SpaceMesh::Box b = mesh->box(e);
    if (mesh->dim == 1) {
      f.coef(e, 0) = (nodal[el[1]] - nodal[el[0]]) / b.hx;
    } else {
      const double sw = nodal[el[0]], se = nodal[el[1]], ne = nodal[el[2]], nw = nodal[el[3]];
      // d/dx of the bilinear interpolant: ((se-sw) + eta*((ne-nw)-(se-sw)))/hx
      f.coef(e, 0) = (se - sw) / b.hx;
      f.coef(e, 2) = ((ne - nw) - (se - sw)) / b.hx;
      // d/dy: ((nw-sw) + xi*((ne-se)-(nw-sw)))/hy
      f.coef(e, nb + 0) = (nw - sw) / b.hy;
      f.coef(e, nb + 1) = ((ne - se) - (nw - sw)) / b.hy;
    }
  }
  return f;
}

namespace {

Eigen::MatrixXd local_gram(const SpaceMesh& mesh, int e) {
  const int nb = poly_basis_size(mesh.dim);
  const ElementQuadrature q = element_quadrature(mesh, e);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(nb, nb);
  double phi[6];
  for (int g = 0; g < q.n; ++g) {
    poly_basis_eval(mesh.dim, q.xi[g], q.eta[g], phi);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) G(i, j) += q.w[g] * phi[i] * phi[j];
  }
  return G;
}

}  // namespace

ElementScalarPoly project_scalar(std::shared_ptr<const SpaceMesh> mesh,
                                 const std::function<double(double, double)>& f) {
  ElementScalarPoly out;
  const int nb = poly_basis_size(mesh->dim);
  out.coef = Eigen::MatrixXd::Zero(mesh->n_elements(), nb);
  double phi[6];
  for (int e = 0; e < mesh->n_elements(); ++e) {
    const SpaceMesh::Box b = mesh->box(e);
    const ElementQuadrature q = element_quadrature(*mesh, e);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
    for (int g = 0; g < q.n; ++g) {
      const double x = b.x0 + q.xi[g] * b.hx;
      const double y = mesh->dim == 2 ? b.y0 + q.eta[g] * b.hy : 0.0;
      poly_basis_eval(mesh->dim, q.xi[g], q.eta[g], phi);
      const double fv = f(x, y);
      for (int i = 0; i < nb; ++i) rhs[i] += q.w[g] * fv * phi[i];
    }
    out.coef.row(e) = local_gram(*mesh, e).ldlt().solve(rhs).transpose();
  }
  out.mesh = std::move(mesh);
  return out;
}

ElementPolyField project_vector(std::shared_ptr<const SpaceMesh> mesh,
                                const std::function<Eigen::Vector2d(double, double)>& f) {
  ElementPolyField out = ElementPolyField::zero(mesh);
  const int nb = poly_basis_size(mesh->dim);
  double phi[6];
  for (int e = 0; e < mesh->n_elements(); ++e) {
    const SpaceMesh::Box b = mesh->box(e);
    const ElementQuadrature q = element_quadrature(*mesh, e);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nb, mesh->dim);
    for (int g = 0; g < q.n; ++g) {
      const double x = b.x0 + q.xi[g] * b.hx;
      const double y = mesh->dim == 2 ? b.y0 + q.eta[g] * b.hy : 0.0;
      poly_basis_eval(mesh->dim, q.xi[g], q.eta[g], phi);
      const Eigen::Vector2d fv = f(x, y);
      for (int i = 0; i < nb; ++i)
        for (int c = 0; c < mesh->dim; ++c) rhs(i, c) += q.w[g] * fv[c] * phi[i];
    }
    const Eigen::MatrixXd sol = local_gram(*mesh, e).ldlt().solve(rhs);
    for (int c = 0; c < mesh->dim; ++c) out.coef.row(e).segment(c * nb, nb) = sol.col(c).transpose();
  }
  return out;
}

namespace {

// Evaluate a field at a physical point, reusing a hint that the point
// lies inside fine element `fe` of `fine` (a descendant of field.mesh).
Eigen::Vector2d eval_on(const ElementPolyField& F, const SpaceMesh& fine, int fe, double x,
                        double y) {
  if (F.mesh.get() == &fine) {
    const SpaceMesh::Box b = fine.box(fe);
    return F.eval(fe, (x - b.x0) / b.hx, fine.dim == 2 ? (y - b.y0) / b.hy : 0.0);
  }
  return F.eval_at(x, y);
}

const SpaceMesh* finer_mesh(const ElementPolyField& F, const ElementPolyField& G) {
  if (F.mesh == G.mesh) return F.mesh.get();
  if (F.mesh->descends_from(*G.mesh)) return F.mesh.get();
  if (G.mesh->descends_from(*F.mesh)) return G.mesh.get();
  throw std::invalid_argument("fields live on unrelated meshes");
}

}  // namespace

double field_dot(const ElementPolyField& F, const ElementPolyField& G) {
  const SpaceMesh& fine = *finer_mesh(F, G);
  double acc = 0.0;
  for (int e = 0; e < fine.n_elements(); ++e) {
    const SpaceMesh::Box b = fine.box(e);
    const ElementQuadrature q = element_quadrature(fine, e);
    for (int g = 0; g < q.n; ++g) {
      const double x = b.x0 + q.xi[g] * b.hx;
      const double y = fine.dim == 2 ? b.y0 + q.eta[g] * b.hy : 0.0;
      acc += q.w[g] * eval_on(F, fine, e, x, y).dot(eval_on(G, fine, e, x, y));
    }
  }
  return acc;
}

Eigen::VectorXd field_dot_local(const ElementPolyField& F, const ElementPolyField& G,
                                const SpaceMesh& fine) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(fine.n_elements());
  for (int e = 0; e < fine.n_elements(); ++e) {
    const SpaceMesh::Box b = fine.box(e);
    const ElementQuadrature q = element_quadrature(fine, e);
    double acc = 0.0;
    for (int g = 0; g < q.n; ++g) {
      const double x = b.x0 + q.xi[g] * b.hx;
      const double y = fine.dim == 2 ? b.y0 + q.eta[g] * b.hy : 0.0;
      acc += q.w[g] * eval_on(F, fine, e, x, y).dot(eval_on(G, fine, e, x, y));
    }
    out[e] = acc;
  }
  return out;
}

Eigen::VectorXd field_grad_product(const ElementPolyField& F) {
  const SpaceMesh& mesh = *F.mesh;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.n_nodes());
  const int nc = mesh.n_corners();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const SpaceMesh::Box b = mesh.box(e);
    const ElementQuadrature q = element_quadrature(mesh, e);
    for (int g = 0; g < q.n; ++g) {
      const Eigen::Vector2d Fv = F.eval(e, q.xi[g], q.eta[g]);
      // gradients of the corner shape functions
      for (int c = 0; c < nc; ++c) {
        double gx, gy = 0.0;
        const double xi = q.xi[g], eta = q.eta[g];
        if (mesh.dim == 1) {
          gx = (c == 0 ? -1.0 : 1.0) / b.hx;
        } else {
          switch (c) {
            case 0: gx = -(1 - eta) / b.hx; gy = -(1 - xi) / b.hy; break;
            case 1: gx = (1 - eta) / b.hx;  gy = -xi / b.hy;       break;
            case 2: gx = eta / b.hx;        gy = xi / b.hy;        break;
            default: gx = -eta / b.hx;      gy = (1 - xi) / b.hy;  break;
          }
        }
        out[mesh.elements[e][c]] += q.w[g] * (Fv[0] * gx + (mesh.dim == 2 ? Fv[1] * gy : 0.0));
      }
    }
  }
  return out;
}

Eigen::VectorXd scalar_node_product(const ElementScalarPoly& f) {
  const SpaceMesh& mesh = *f.mesh;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.n_nodes());
  double phi[4];
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const ElementQuadrature q = element_quadrature(mesh, e);
    for (int g = 0; g < q.n; ++g) {
      const double fv = f.eval(e, q.xi[g], q.eta[g]);
      const double xi = q.xi[g], eta = q.eta[g];
      if (mesh.dim == 1) {
        phi[0] = 1 - xi;
        phi[1] = xi;
      } else {
        phi[0] = (1 - xi) * (1 - eta);
        phi[1] = xi * (1 - eta);
        phi[2] = xi * eta;
        phi[3] = (1 - xi) * eta;
      }
      for (int c = 0; c < mesh.n_corners(); ++c)
        out[mesh.elements[e][c]] += q.w[g] * fv * phi[c];
    }
  }
  return out;
}

double scalar_integral(const ElementScalarPoly& f) {
  double acc = 0.0;
  for (int e = 0; e < f.mesh->n_elements(); ++e) {
    const ElementQuadrature q = element_quadrature(*f.mesh, e);
    for (int g = 0; g < q.n; ++g) acc += q.w[g] * f.eval(e, q.xi[g], q.eta[g]);
  }
  return acc;
}

}  // namespace pgdcert
