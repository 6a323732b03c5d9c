// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/fem.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace pgdcert {

namespace {

constexpr double kGX[3] = {0.11270166537925831, 0.5, 0.8872983346207417};
constexpr double kGW[3] = {0.2777777777777778, 0.4444444444444444, 0.2777777777777778};

void corner_shapes(int dim, double xi, double eta, double* phi) {
  if (dim == 1) {
    phi[0] = 1 - xi;
    phi[1] = xi;
    return;
  }
  phi[0] = (1 - xi) * (1 - eta);
  phi[1] = xi * (1 - eta);
  phi[2] = xi * eta;
  phi[3] = (1 - xi) * eta;
}

void corner_grads(int dim, double xi, double eta, const SpaceMesh::Box& b, double* gx, double* gy) {
  if (dim == 1) {
    gx[0] = -1.0 / b.hx;
    gx[1] = 1.0 / b.hx;
    gy[0] = gy[1] = 0.0;
    return;
  }
  gx[0] = -(1 - eta) / b.hx; gy[0] = -(1 - xi) / b.hy;
  gx[1] = (1 - eta) / b.hx;  gy[1] = -xi / b.hy;
  gx[2] = eta / b.hx;        gy[2] = xi / b.hy;
  gx[3] = -eta / b.hx;       gy[3] = (1 - xi) / b.hy;
}

}  // namespace

SpaceOperators assemble(std::shared_ptr<const SpaceMesh> mesh, const ProblemSpec& spec) {
  const SpaceMesh& m = *mesh;
  SpaceOperators ops;
  ops.mesh = mesh;

  // dof map: Dirichlet and constrained nodes are not unknowns
  std::vector<char> constrained(m.n_nodes(), 0);
  for (const auto& c : m.constraints) constrained[c.node] = 1;
  ops.free_index.assign(m.n_nodes(), -1);
  for (int n = 0; n < m.n_nodes(); ++n)
    if (!m.dirichlet_node[n] && !constrained[n]) ops.free_index[n] = ops.n_free++;

  // prolongation: nodal = P * free (hanging nodes take the mean of their
  // edge ends, Dirichlet rows stay zero)
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int n = 0; n < m.n_nodes(); ++n)
      if (ops.free_index[n] >= 0) trips.emplace_back(n, ops.free_index[n], 1.0);
    for (const auto& c : m.constraints) {
      for (int master : {c.master_a, c.master_b})
        if (ops.free_index[master] >= 0)
          trips.emplace_back(c.node, ops.free_index[master], 0.5);
    }
    ops.P.resize(m.n_nodes(), ops.n_free);
    ops.P.setFromTriplets(trips.begin(), trips.end());
  }

  // element loops
  std::vector<Eigen::Triplet<double>> tm, tk;
  const int nc = m.n_corners();
  for (int e = 0; e < m.n_elements(); ++e) {
    if (m.measure(e) <= 0.0) throw std::invalid_argument("degenerate element");
    const SpaceMesh::Box b = m.box(e);
    Eigen::Matrix4d Me = Eigen::Matrix4d::Zero(), Ke = Eigen::Matrix4d::Zero();
    double phi[4], gx[4], gy[4];
    const ElementQuadrature q = element_quadrature(m, e);
    for (int g = 0; g < q.n; ++g) {
      corner_shapes(m.dim, q.xi[g], q.eta[g], phi);
      corner_grads(m.dim, q.xi[g], q.eta[g], b, gx, gy);
      for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j) {
          Me(i, j) += q.w[g] * phi[i] * phi[j];
          Ke(i, j) += q.w[g] * (gx[i] * gx[j] + gy[i] * gy[j]);
        }
    }
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j) {
        tm.emplace_back(m.elements[e][i], m.elements[e][j], Me(i, j));
        tk.emplace_back(m.elements[e][i], m.elements[e][j], Ke(i, j));
      }
  }
  Eigen::SparseMatrix<double> Mn(m.n_nodes(), m.n_nodes()), Kn(m.n_nodes(), m.n_nodes());
  Mn.setFromTriplets(tm.begin(), tm.end());
  Kn.setFromTriplets(tk.begin(), tk.end());
  // the triple product can pick up O(eps) asymmetry from summation
  // order; the operators are symmetric by construction, so mirror them
  auto symmetrize = [](const Eigen::SparseMatrix<double>& A) {
    Eigen::SparseMatrix<double> At = A.transpose();
    return Eigen::SparseMatrix<double>(0.5 * (A + At));
  };
  ops.M = symmetrize(ops.P.transpose() * Mn * ops.P);
  ops.K = symmetrize(ops.P.transpose() * Kn * ops.P);

  // load terms: densities materialized per element / boundary edge
  for (const auto& load : spec.loads) {
    LoadData data;
    Eigen::VectorXd Fn = Eigen::VectorXd::Zero(m.n_nodes());

    if (!load.body.empty()) {
      const Expression& f = load.body;
      data.body = project_scalar(mesh, [&](double x, double y) {
        return m.dim == 1 ? f.eval1("x", x) : f.eval2("x", x, "y", y);
      });
    } else if (!load.body_region.empty()) {
      // constant on the descendants of the listed coarse elements
      const SpaceMesh* root = &m;
      while (root->parent) root = root->parent.get();
      std::vector<char> in_region(root->n_elements(), 0);
      for (int e : load.body_region) in_region[e] = 1;
      ElementScalarPoly f;
      f.mesh = mesh;
      f.coef = Eigen::MatrixXd::Zero(m.n_elements(), poly_basis_size(m.dim));
      for (int e = 0; e < m.n_elements(); ++e) {
        int a = e;
        const SpaceMesh* mm = &m;
        while (mm->parent) {
          a = mm->parent_element[a];
          mm = mm->parent.get();
        }
        if (in_region[a]) f.coef(e, 0) = load.body_scale;
      }
      data.body = std::move(f);
    }
    if (!data.body.zero()) Fn += scalar_node_product(data.body);

    if (load.gradient) {
      const auto& gl = *load.gradient;
      data.gradient = project_vector(mesh, [&](double x, double y) {
        Eigen::Vector2d v = Eigen::Vector2d::Zero();
        if (!gl.qx.empty()) v[0] = m.dim == 1 ? gl.qx.eval1("x", x) : gl.qx.eval2("x", x, "y", y);
        if (m.dim == 2 && !gl.qy.empty()) v[1] = gl.qy.eval2("x", x, "y", y);
        return v;
      });
      data.has_gradient = true;
      Fn += field_grad_product(data.gradient);
    }

    if (load.flux) {
      for (size_t bi = 0; bi < m.boundary.size(); ++bi) {
        const auto& be = m.boundary[bi];
        if (std::find(load.flux->tags.begin(), load.flux->tags.end(), be.tag) ==
            load.flux->tags.end())
          continue;
        if (m.dim == 1) {
          // point flux at the boundary node
          const double x = m.nodes(be.nodes[0], 0);
          const double g = load.flux->g.eval1("x", x);
          Fn[be.nodes[0]] += g;
          LoadData::EdgeFlux ef;
          ef.boundary_index = static_cast<int>(bi);
          ef.g = Eigen::Vector3d(g, 0, 0);
          data.edges.push_back(ef);
          continue;
        }
        const double ax = m.nodes(be.nodes[0], 0), ay = m.nodes(be.nodes[0], 1);
        const double bx = m.nodes(be.nodes[1], 0), by = m.nodes(be.nodes[1], 1);
        const double len = std::hypot(bx - ax, by - ay);
        // quadratic fit of g along the edge at s = 0, 1/2, 1
        auto geval = [&](double s) {
          return load.flux->g.eval2("x", ax + s * (bx - ax), "y", ay + s * (by - ay));
        };
        const double g0 = geval(0.0), gh = geval(0.5), g1 = geval(1.0);
        LoadData::EdgeFlux ef;
        ef.boundary_index = static_cast<int>(bi);
        ef.g = Eigen::Vector3d(g0, -3 * g0 + 4 * gh - g1, 2 * g0 - 4 * gh + 2 * g1);
        data.edges.push_back(ef);
        // assemble against the two endpoint hats (3-pt Gauss on the edge)
        for (int gq = 0; gq < 3; ++gq) {
          const double s = kGX[gq], w = kGW[gq] * len;
          const double gv = ef.g[0] + ef.g[1] * s + ef.g[2] * s * s;
          Fn[be.nodes[0]] += w * gv * (1 - s);
          Fn[be.nodes[1]] += w * gv * s;
        }
      }
    }

    ops.F.push_back(ops.P.transpose() * Fn);
    ops.load_data.push_back(std::move(data));
  }

  return ops;
}

Eigen::VectorXd solve_space_system(const SpaceOperators& ops, double a, double b,
                                   const Eigen::VectorXd& rhs) {
  if (!((a >= 0 && b > 0) || (a > 0 && b >= 0)))
    throw std::invalid_argument("indefinite space system combination");
  if (ops.n_free == 0) return Eigen::VectorXd();
  Eigen::SparseMatrix<double> A = a * ops.M + b * ops.K;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
  if (solver.info() != Eigen::Success) throw std::runtime_error("space system factorization failed");
  Eigen::VectorXd x = solver.solve(rhs);
  // one refinement pass keeps the relative residual at the 1e-12 contract
  x += solver.solve(rhs - A * x);
  return x;
}

Eigen::VectorXd solve_time_ode(const TimeGrid& grid, double a, double b, const TimeFn& forcing) {
  if (a == 0.0 && b == 0.0) throw std::invalid_argument("time problem needs a > 0 or b > 0");
  if (a < 0 || b < 0) throw std::invalid_argument("time problem coefficients must be nonnegative");
  const Eigen::VectorXd& t = *grid.nodes;
  const auto N = t.size() - 1;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(N + 1);

  if (a == 0.0) {
    // algebraic case: unconstrained L2 projection of f/b onto the
    // piecewise-linear space (tridiagonal mass solve)
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N + 1, N + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
    for (Eigen::Index n = 0; n < N; ++n) {
      const double h = t[n + 1] - t[n];
      M(n, n) += h / 3;
      M(n + 1, n + 1) += h / 3;
      M(n, n + 1) += h / 6;
      M(n + 1, n) += h / 6;
      for (int g = 0; g < 3; ++g) {
        const double s = kGX[g], w = kGW[g] * h;
        const double fv = forcing.eval(t[n] + s * h) / b;
        rhs[n] += w * fv * (1 - s);
        rhs[n + 1] += w * fv * s;
      }
    }
    lam = M.ldlt().solve(rhs);
    return lam;
  }

  // marching cG(1): per interval a (u_n - u_{n-1}) + b int u = int f
  for (Eigen::Index n = 0; n < N; ++n) {
    const double h = t[n + 1] - t[n];
    double load = 0.0;
    for (int g = 0; g < 3; ++g) load += kGW[g] * h * forcing.eval(t[n] + kGX[g] * h);
    const double lhs = a + b * h / 2;
    const double rhs = load + (a - b * h / 2) * lam[n];
    lam[n + 1] = rhs / lhs;
  }
  return lam;
}

namespace {

// interval load vector: int_{t_n}^{t_{n+1}} l(v; t) dt on the free dofs
Eigen::VectorXd interval_load(const ProblemSpec& spec, const Eigen::VectorXd& p,
                              const SpaceOperators& ops, double t0, double t1) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ops.n_free);
  for (size_t s = 0; s < spec.loads.size(); ++s) {
    const auto& load = spec.loads[s];
    const TimeFn alpha = TimeFn::from_fn(load.alpha);
    const double at = integrate_time({&alpha}, t0, t1);
    out += at * load.beta_eval(p) * ops.F[s];
  }
  return out;
}

}  // namespace

SpaceTimeField reference_solve(const ProblemSpec& spec, const Eigen::VectorXd& p,
                               std::shared_ptr<const SpaceMesh> mesh,
                               std::shared_ptr<const TimeGrid> grid) {
  const SpaceOperators ops = assemble(mesh, spec);
  SpaceTimeField out;
  out.mesh = mesh;
  out.grid = grid;

  const double kv = spec.coeff_k.eval(p);
  const double rv = spec.coeff_r.eval(p);

  if (spec.steady) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ops.n_free);
    for (size_t s = 0; s < spec.loads.size(); ++s) rhs += spec.loads[s].beta_eval(p) * ops.F[s];
    const Eigen::VectorXd u = solve_space_system(ops, rv, kv, rhs);
    out.values.resize(mesh->n_nodes(), 1);
    out.values.col(0) = ops.to_nodal(u);
    return out;
  }

  const double cv = spec.coeff_c.eval(p);
  const Eigen::VectorXd& t = *grid->nodes;
  const auto N = t.size() - 1;
  out.values = Eigen::MatrixXd::Zero(mesh->n_nodes(), N + 1);

  Eigen::SparseMatrix<double> B = kv * ops.K + rv * ops.M;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(ops.n_free);
  double h_prev = -1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  for (Eigen::Index n = 0; n < N; ++n) {
    const double h = t[n + 1] - t[n];
    if (h != h_prev) {
      Eigen::SparseMatrix<double> A = cv * ops.M + (h / 2) * B;
      solver.compute(A);
      if (solver.info() != Eigen::Success) throw std::runtime_error("singular time-step system");
      h_prev = h;
    }
    const Eigen::VectorXd rhs =
        interval_load(spec, p, ops, t[n], t[n + 1]) + cv * (ops.M * u) - (h / 2) * (B * u);
    u = solver.solve(rhs);
    out.values.col(n + 1) = ops.to_nodal(u);
  }
  return out;
}

double discrete_residual_norm(const ProblemSpec& spec, const Eigen::VectorXd& p,
                              const SpaceOperators& ops, const TimeGrid& grid,
                              const SpaceTimeField& u) {
  const double kv = spec.coeff_k.eval(p), rv = spec.coeff_r.eval(p), cv = spec.coeff_c.eval(p);
  const Eigen::VectorXd& t = *grid.nodes;
  const auto N = t.size() - 1;
  Eigen::SparseMatrix<double> B = kv * ops.K + rv * ops.M;
  double res2 = 0.0, load2 = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    const double h = t[n + 1] - t[n];
    const Eigen::VectorXd u0 = ops.restrict_nodal(u.values.col(n));
    Eigen::VectorXd u0f(ops.n_free), u1f(ops.n_free);
    for (int nn = 0; nn < ops.mesh->n_nodes(); ++nn)
      if (ops.free_index[nn] >= 0) {
        u0f[ops.free_index[nn]] = u.values(nn, n);
        u1f[ops.free_index[nn]] = u.values(nn, n + 1);
      }
    const Eigen::VectorXd l = interval_load(spec, p, ops, t[n], t[n + 1]);
    const Eigen::VectorXd r = cv * (ops.M * (u1f - u0f)) + (h / 2) * (B * (u0f + u1f)) - l;
    res2 += r.squaredNorm();
    load2 += l.squaredNorm();
  }
  return std::sqrt(res2) / std::max(std::sqrt(load2), 1e-300);
}

double energy_norm_sq(const ProblemSpec& spec, const Eigen::VectorXd& p, const SpaceOperators& ops,
                      const TimeGrid& grid, const Eigen::MatrixXd& nodal_trajectory) {
  const double kv = spec.coeff_k.eval(p);
  const double rv = spec.coeff_r.eval(p);

  auto free_col = [&](Eigen::Index c) {
    Eigen::VectorXd v(ops.n_free);
    for (int n = 0; n < ops.mesh->n_nodes(); ++n)
      if (ops.free_index[n] >= 0) v[ops.free_index[n]] = nodal_trajectory(n, c);
    return v;
  };

  if (spec.steady) {
    const Eigen::VectorXd e = free_col(0);
    return kv * e.dot(ops.K * e) + rv * e.dot(ops.M * e);
  }

  const double cv = spec.coeff_c.eval(p);
  const Eigen::VectorXd& t = *grid.nodes;
  double acc = 0.0;
  Eigen::VectorXd e0 = free_col(0);
  Eigen::VectorXd Ke0 = ops.K * e0, Me0 = ops.M * e0;
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n) {
    const Eigen::VectorXd e1 = free_col(n + 1);
    const Eigen::VectorXd Ke1 = ops.K * e1, Me1 = ops.M * e1;
    const double h = t[n + 1] - t[n];
    // int over the interval of a linearly interpolated quadratic form
    acc += kv * h / 3.0 * (e0.dot(Ke0) + e0.dot(Ke1) + e1.dot(Ke1));
    acc += rv * h / 3.0 * (e0.dot(Me0) + e0.dot(Me1) + e1.dot(Me1));
    e0 = e1;
    Ke0 = Ke1;
    Me0 = Me1;
  }
  acc += cv * e0.dot(Me0);  // final-time term
  return acc;
}

}  // namespace pgdcert
