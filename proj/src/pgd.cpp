// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/pgd.hpp"

#include <json.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace pgdcert {

namespace {
constexpr double kGX[3] = {0.11270166537925831, 0.5, 0.8872983346207417};
constexpr double kGW[3] = {0.2777777777777778, 0.4444444444444444, 0.2777777777777778};
constexpr double kZeroTol = 1e-150;
}  // namespace

double grid_product_integral(const Eigen::VectorXd& x,
                             std::initializer_list<const Eigen::VectorXd*> fs) {
  // trapezoid-weighted pointwise products: the parameter grids act as a
  // fine collocation discretization, so identities that hold at grid
  // points transfer exactly to the integrals
  double acc = 0.0;
  for (Eigen::Index q = 0; q < x.size(); ++q) {
    double w = 0.0;
    if (q > 0) w += 0.5 * (x[q] - x[q - 1]);
    if (q + 1 < x.size()) w += 0.5 * (x[q + 1] - x[q]);
    double prod = 1.0;
    for (const auto* f : fs) prod *= (*f)[q];
    acc += w * prod;
  }
  return acc;
}

double grid_l2_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  return std::sqrt(grid_product_integral(x, {&v, &v}));
}

namespace {

double tgrid_ll(const Eigen::VectorXd& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n) {
    const double h = t[n + 1] - t[n];
    acc += h / 6.0 * (2 * a[n] * b[n] + a[n] * b[n + 1] + a[n + 1] * b[n] + 2 * a[n + 1] * b[n + 1]);
  }
  return acc;
}

// int a' b dt
double tgrid_dll(const Eigen::VectorXd& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n)
    acc += (a[n + 1] - a[n]) * 0.5 * (b[n] + b[n + 1]);
  return acc;
}

double tgrid_al(const Eigen::VectorXd& t, const ScalarFn& alpha, const Eigen::VectorXd& lam) {
  double acc = 0.0;
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n) {
    const double h = t[n + 1] - t[n];
    for (int g = 0; g < 3; ++g) {
      const double s = kGX[g];
      acc += h * kGW[g] * alpha.eval(t[n] + s * h) * ((1 - s) * lam[n] + s * lam[n + 1]);
    }
  }
  return acc;
}

Eigen::VectorXd hat_products_nodal(const Eigen::VectorXd& t, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t.size());
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n) {
    const double h = t[n + 1] - t[n];
    out[n] += h / 6.0 * (2 * v[n] + v[n + 1]);
    out[n + 1] += h / 6.0 * (v[n] + 2 * v[n + 1]);
  }
  return out;
}

Eigen::VectorXd hat_products_deriv(const Eigen::VectorXd& t, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t.size());
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n) {
    const double d = v[n + 1] - v[n];
    out[n] += d / 2.0;
    out[n + 1] += d / 2.0;
  }
  return out;
}

Eigen::VectorXd hat_products_alpha(const Eigen::VectorXd& t, const ScalarFn& alpha) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t.size());
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n) {
    const double h = t[n + 1] - t[n];
    for (int g = 0; g < 3; ++g) {
      const double s = kGX[g];
      const double av = alpha.eval(t[n] + s * h);
      out[n] += h * kGW[g] * av * (1 - s);
      out[n + 1] += h * kGW[g] * av * s;
    }
  }
  return out;
}

Eigen::VectorXd axis_values(const ScalarFn& fn, const Eigen::VectorXd& grid) {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) out[i] = fn.eval(grid[i]);
  return out;
}

Eigen::VectorXd coeff_axis_values(const ParamScalar& c, int axis, const Eigen::VectorXd& grid) {
  for (const auto& f : c.factors)
    if (f.axis == axis) return axis_values(f.fn, grid);
  return Eigen::VectorXd::Ones(grid.size());
}

Eigen::VectorXd nodal_to_free(const SpaceOperators& ops, const Eigen::VectorXd& nodal) {
  Eigen::VectorXd free(ops.n_free);
  for (int n = 0; n < ops.mesh->n_nodes(); ++n)
    if (ops.free_index[n] >= 0) free[ops.free_index[n]] = nodal[n];
  return free;
}

}  // namespace

GramCache build_cache(std::shared_ptr<const ProblemSpec> spec,
                      std::shared_ptr<const SpaceMesh> mesh,
                      std::shared_ptr<const TimeGrid> grid, const SeparatedSolution& sol) {
  GramCache cache;
  cache.spec = spec;
  cache.ops = assemble(mesh, *spec);
  cache.grid = grid;

  const int np = spec->n_axes();
  const int S = cache.n_loads();
  cache.axes.resize(np);
  for (int j = 0; j < np; ++j) {
    const auto& g = spec->parameters[j].grid;
    auto& ax = cache.axes[j];
    ax.c_vals = coeff_axis_values(spec->coeff_c, j, g);
    ax.k_vals = coeff_axis_values(spec->coeff_k, j, g);
    ax.r_vals = coeff_axis_values(spec->coeff_r, j, g);
    ax.beta_vals.resize(S, g.size());
    for (int s = 0; s < S; ++s) {
      Eigen::VectorXd b = Eigen::VectorXd::Ones(g.size());
      for (const auto& f : spec->loads[s].beta)
        if (f.axis == j) b = axis_values(f.fn, g);
      ax.beta_vals.row(s) = b.transpose();
    }
    ax.gamma.resize(g.size(), 0);
  }

  cache.psi_free.resize(cache.ops.n_free, 0);
  cache.m_psi.resize(cache.ops.n_free, 0);
  cache.k_psi.resize(cache.ops.n_free, 0);
  cache.psi_f.resize(0, S);
  cache.alpha_lam.resize(S, 0);
  if (!spec->steady) cache.lam.resize(grid->nodes->size(), 0);

  for (const auto& mode : sol.modes) cache_append_mode(cache, mode);
  return cache;
}

void cache_append_mode(GramCache& cache, const Mode& mode) {
  const auto& spec = *cache.spec;
  const int m = cache.m;
  const int S = cache.n_loads();

  // exact transfers onto the cache discretization
  const Eigen::VectorXd psi_nodal = transfer_space(mode.psi, *mode.mesh, *cache.ops.mesh);
  const Eigen::VectorXd psi_free = nodal_to_free(cache.ops, psi_nodal);

  cache.psi_free.conservativeResize(Eigen::NoChange, m + 1);
  cache.psi_free.col(m) = psi_free;
  cache.m_psi.conservativeResize(Eigen::NoChange, m + 1);
  cache.m_psi.col(m) = cache.ops.M * psi_free;
  cache.k_psi.conservativeResize(Eigen::NoChange, m + 1);
  cache.k_psi.col(m) = cache.ops.K * psi_free;

  cache.psi_m_psi.conservativeResize(m + 1, m + 1);
  cache.psi_k_psi.conservativeResize(m + 1, m + 1);
  for (int i = 0; i <= m; ++i) {
    cache.psi_m_psi(i, m) = cache.psi_free.col(i).dot(cache.m_psi.col(m));
    cache.psi_m_psi(m, i) = cache.psi_m_psi(i, m);
    cache.psi_k_psi(i, m) = cache.psi_free.col(i).dot(cache.k_psi.col(m));
    cache.psi_k_psi(m, i) = cache.psi_k_psi(i, m);
  }
  cache.psi_f.conservativeResize(m + 1, Eigen::NoChange);
  for (int s = 0; s < S; ++s) cache.psi_f(m, s) = psi_free.dot(cache.ops.F[s]);

  if (!spec.steady) {
    const Eigen::VectorXd lam = transfer_time(mode.lam, *mode.grid, *cache.grid);
    const Eigen::VectorXd& t = *cache.grid->nodes;
    cache.lam.conservativeResize(Eigen::NoChange, m + 1);
    cache.lam.col(m) = lam;
    cache.lam_lam.conservativeResize(m + 1, m + 1);
    cache.dlam_lam.conservativeResize(m + 1, m + 1);
    for (int i = 0; i <= m; ++i) {
      cache.lam_lam(i, m) = tgrid_ll(t, cache.lam.col(i), lam);
      cache.lam_lam(m, i) = cache.lam_lam(i, m);
      cache.dlam_lam(i, m) = tgrid_dll(t, cache.lam.col(i), lam);
      cache.dlam_lam(m, i) = tgrid_dll(t, lam, cache.lam.col(i));
    }
    cache.alpha_lam.conservativeResize(Eigen::NoChange, m + 1);
    for (int s = 0; s < S; ++s) cache.alpha_lam(s, m) = tgrid_al(t, spec.loads[s].alpha, lam);
  }

  for (int j = 0; j < spec.n_axes(); ++j) {
    auto& ax = cache.axes[j];
    const auto& g = spec.parameters[j].grid;
    const Eigen::VectorXd& gam = mode.gammas[j];
    ax.gamma.conservativeResize(Eigen::NoChange, m + 1);
    ax.gamma.col(m) = gam;
    ax.gc.conservativeResize(m + 1, m + 1);
    ax.gk.conservativeResize(m + 1, m + 1);
    ax.gr.conservativeResize(m + 1, m + 1);
    for (int i = 0; i <= m; ++i) {
      const Eigen::VectorXd gi = ax.gamma.col(i);
      ax.gc(i, m) = grid_product_integral(g, {&ax.c_vals, &gi, &gam});
      ax.gk(i, m) = grid_product_integral(g, {&ax.k_vals, &gi, &gam});
      ax.gr(i, m) = grid_product_integral(g, {&ax.r_vals, &gi, &gam});
      ax.gc(m, i) = ax.gc(i, m);
      ax.gk(m, i) = ax.gk(i, m);
      ax.gr(m, i) = ax.gr(i, m);
    }
    ax.beta_gamma.conservativeResize(S, m + 1);
    for (int s = 0; s < S; ++s) {
      const Eigen::VectorXd b = ax.beta_vals.row(s).transpose();
      ax.beta_gamma(s, m) = grid_product_integral(g, {&b, &gam});
    }
  }

  ++cache.m;
}

std::optional<Mode> compute_next_mode(const GramCache& cache, const SeparatedSolution& sol,
                                      int k_max) {
  (void)sol;
  const auto& spec = *cache.spec;
  const auto& ops = cache.ops;
  const int np = spec.n_axes();
  const int S = cache.n_loads();
  const int m = cache.m;
  const bool steady = spec.steady;

  if (ops.n_free == 0) throw std::runtime_error("no free space dofs");

  double load_scale = 0.0;
  for (const auto& F : ops.F) load_scale = std::max(load_scale, F.norm());
  if (m == 0 && load_scale == 0.0) return std::nullopt;

  const double c0 = spec.coeff_c.base, k0 = spec.coeff_k.base, r0 = spec.coeff_r.base;

  // deterministic start: seeded pseudo-random space profile and flat
  // normalized parameter factors; the time factor is solved first
  Eigen::VectorXd psi(ops.n_free);
  {
    std::mt19937 rng(spec.solver.seed + 1000003u * static_cast<unsigned>(m + 1));
    for (int i = 0; i < ops.n_free; ++i)
      psi[i] = 2.0 * (static_cast<double>(rng()) / 4294967296.0) - 1.0;
    psi.normalize();
  }
  std::vector<Eigen::VectorXd> gammas(np);
  for (int j = 0; j < np; ++j) {
    const auto& g = spec.parameters[j].grid;
    gammas[j] = Eigen::VectorXd::Constant(g.size(), 1.0 / std::sqrt(g[g.size() - 1] - g[0]));
  }
  Eigen::VectorXd lam;

  const Eigen::VectorXd* tnodes = steady ? nullptr : cache.grid->nodes.get();

  // candidate/cache couplings, refreshed after each directional update
  std::vector<double> cbar(np, 1.0), kbar(np, 1.0), rbar(np, 1.0);
  Eigen::MatrixXd cross_c(np, std::max(m, 1)), cross_k(np, std::max(m, 1)),
      cross_r(np, std::max(m, 1));
  Eigen::MatrixXd beta_g(np, std::max(S, 1));
  auto refresh_axis = [&](int j) {
    const auto& ax = cache.axes[j];
    const auto& g = spec.parameters[j].grid;
    const Eigen::VectorXd& gam = gammas[j];
    cbar[j] = grid_product_integral(g, {&ax.c_vals, &gam, &gam});
    kbar[j] = grid_product_integral(g, {&ax.k_vals, &gam, &gam});
    rbar[j] = grid_product_integral(g, {&ax.r_vals, &gam, &gam});
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd gi = ax.gamma.col(i);
      cross_c(j, i) = grid_product_integral(g, {&ax.c_vals, &gam, &gi});
      cross_k(j, i) = grid_product_integral(g, {&ax.k_vals, &gam, &gi});
      cross_r(j, i) = grid_product_integral(g, {&ax.r_vals, &gam, &gi});
    }
    for (int s = 0; s < S; ++s) {
      const Eigen::VectorXd b = ax.beta_vals.row(s).transpose();
      beta_g(j, s) = grid_product_integral(g, {&b, &gam});
    }
  };
  for (int j = 0; j < np; ++j) refresh_axis(j);

  auto prod_except = [&](const std::vector<double>& arr, int skip) {
    double p = 1.0;
    for (int j = 0; j < np; ++j)
      if (j != skip) p *= arr[j];
    return p;
  };
  auto prod_cross_except = [&](const Eigen::MatrixXd& mat, int i, int skip) {
    double p = 1.0;
    for (int j = 0; j < np; ++j)
      if (j != skip) p *= mat(j, i);
    return p;
  };
  auto prod_beta_except = [&](int s, int skip) {
    double p = 1.0;
    for (int j = 0; j < np; ++j)
      if (j != skip) p *= beta_g(j, s);
    return p;
  };

  // time couplings of the candidate
  Eigen::VectorXd al = Eigen::VectorXd::Ones(std::max(S, 1));
  Eigen::VectorXd ll_i = Eigen::VectorXd::Ones(std::max(m, 1));
  Eigen::VectorXd dll_i = Eigen::VectorXd::Zero(std::max(m, 1));
  double ll = 1.0, dll = 0.0;
  auto refresh_time = [&]() {
    if (steady) return;
    const Eigen::VectorXd& t = *tnodes;
    ll = tgrid_ll(t, lam, lam);
    dll = tgrid_dll(t, lam, lam);
    for (int i = 0; i < m; ++i) {
      ll_i[i] = tgrid_ll(t, cache.lam.col(i), lam);
      dll_i[i] = tgrid_dll(t, cache.lam.col(i), lam);
    }
    for (int s = 0; s < S; ++s) al[s] = tgrid_al(t, spec.loads[s].alpha, lam);
  };

  double psi_m_psi = 0, psi_k_psi = 0;
  Eigen::VectorXd psi_m_modes(std::max(m, 1)), psi_k_modes(std::max(m, 1)),
      psi_f(std::max(S, 1));
  auto refresh_space = [&]() {
    const Eigen::VectorXd Mp = ops.M * psi;
    const Eigen::VectorXd Kp = ops.K * psi;
    psi_m_psi = psi.dot(Mp);
    psi_k_psi = psi.dot(Kp);
    for (int i = 0; i < m; ++i) {
      psi_m_modes[i] = cache.psi_free.col(i).dot(Mp);
      psi_k_modes[i] = cache.psi_free.col(i).dot(Kp);
    }
    for (int s = 0; s < S; ++s) psi_f[s] = psi.dot(ops.F[s]);
  };
  refresh_space();

  for (int k = 0; k < k_max; ++k) {
    if (!steady) {
      const double A = c0 * prod_except(cbar, -1) * psi_m_psi;
      const double B =
          k0 * prod_except(kbar, -1) * psi_k_psi + r0 * prod_except(rbar, -1) * psi_m_psi;
      Eigen::VectorXd fs_coef(std::max(S, 1)), mc_coef(std::max(m, 1)), mk_coef(std::max(m, 1));
      for (int s = 0; s < S; ++s) fs_coef[s] = prod_beta_except(s, -1) * psi_f[s];
      for (int i = 0; i < m; ++i) {
        mc_coef[i] = c0 * prod_cross_except(cross_c, i, -1) * psi_m_modes[i];
        mk_coef[i] = k0 * prod_cross_except(cross_k, i, -1) * psi_k_modes[i] +
                     r0 * prod_cross_except(cross_r, i, -1) * psi_m_modes[i];
      }
      std::vector<TimeFn> mode_lams, mode_dlams;
      for (int i = 0; i < m; ++i) {
        mode_lams.push_back(TimeFn::nodal(cache.grid->nodes, cache.lam.col(i)));
        mode_dlams.push_back(TimeFn::nodal_deriv(cache.grid->nodes, cache.lam.col(i)));
      }
      auto forcing_eval = [&, fs_coef, mc_coef, mk_coef](double t) {
        double f = 0.0;
        for (int s = 0; s < S; ++s) f += fs_coef[s] * spec.loads[s].alpha.eval(t);
        for (int i = 0; i < m; ++i)
          f -= mc_coef[i] * mode_dlams[i].eval(t) + mk_coef[i] * mode_lams[i].eval(t);
        return f;
      };
      lam = solve_time_ode(*cache.grid, A, B, TimeFn::custom(forcing_eval, cache.grid->nodes));
      const double lnorm = std::sqrt(tgrid_ll(*tnodes, lam, lam));
      if (lnorm <= kZeroTol) return std::nullopt;
      lam /= lnorm;
      refresh_time();
    }

    // scalar algebraic update of each parameter factor, in axis order
    for (int j0 = 0; j0 < np; ++j0) {
      const auto& ax = cache.axes[j0];
      const auto& g = spec.parameters[j0].grid;
      const double c_oth = prod_except(cbar, j0);
      const double k_oth = prod_except(kbar, j0);
      const double r_oth = prod_except(rbar, j0);

      Eigen::VectorXd den(g.size());
      for (Eigen::Index q = 0; q < g.size(); ++q)
        den[q] = c0 * ax.c_vals[q] * c_oth * psi_m_psi * dll +
                 (k0 * ax.k_vals[q] * k_oth * psi_k_psi + r0 * ax.r_vals[q] * r_oth * psi_m_psi) * ll;

      Eigen::VectorXd num = Eigen::VectorXd::Zero(g.size());
      for (int s = 0; s < S; ++s)
        num += prod_beta_except(s, j0) * psi_f[s] * al[s] * ax.beta_vals.row(s).transpose();
      for (int i = 0; i < m; ++i) {
        const double wc = c0 * prod_cross_except(cross_c, i, j0) * psi_m_modes[i] * dll_i[i];
        const double wk = k0 * prod_cross_except(cross_k, i, j0) * psi_k_modes[i] * ll_i[i];
        const double wr = r0 * prod_cross_except(cross_r, i, j0) * psi_m_modes[i] * ll_i[i];
        num -= ax.gamma.col(i).cwiseProduct(wc * ax.c_vals + wk * ax.k_vals + wr * ax.r_vals);
      }

      const double dmax = den.cwiseAbs().maxCoeff();
      if (dmax <= kZeroTol) throw std::runtime_error("degenerate parameter sub-problem");
      for (Eigen::Index q = 0; q < g.size(); ++q) {
        if (std::abs(den[q]) <= 1e-14 * dmax)
          throw std::runtime_error("indefinite parameter sub-problem at a grid point");
        gammas[j0][q] = num[q] / den[q];
      }
      const double gnorm = grid_l2_norm(g, gammas[j0]);
      if (gnorm <= kZeroTol) return std::nullopt;
      gammas[j0] /= gnorm;
      refresh_axis(j0);
    }

    // space solve closes every round
    {
      const double a = c0 * prod_except(cbar, -1) * dll + r0 * prod_except(rbar, -1) * ll;
      const double b = k0 * prod_except(kbar, -1) * ll;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ops.n_free);
      for (int s = 0; s < S; ++s) rhs += prod_beta_except(s, -1) * al[s] * ops.F[s];
      for (int i = 0; i < m; ++i) {
        const double wm = c0 * prod_cross_except(cross_c, i, -1) * dll_i[i] +
                          r0 * prod_cross_except(cross_r, i, -1) * ll_i[i];
        const double wk = k0 * prod_cross_except(cross_k, i, -1) * ll_i[i];
        rhs -= wm * cache.m_psi.col(i) + wk * cache.k_psi.col(i);
      }
      psi = solve_space_system(ops, a, b, rhs);
      refresh_space();
    }
  }

  Mode mode;
  mode.psi = ops.to_nodal(psi);
  mode.mesh = ops.mesh;
  mode.grid = cache.grid;
  if (!steady) mode.lam = lam;
  mode.gammas = std::move(gammas);
  return mode;
}

namespace {

double mode_energy(const GramCache& cache, const Mode& mode) {
  const Eigen::VectorXd nodal = transfer_space(mode.psi, *mode.mesh, *cache.ops.mesh);
  const Eigen::VectorXd free = nodal_to_free(cache.ops, nodal);
  return free.dot(cache.ops.K * free);
}

}  // namespace

bool extend_pgd(SeparatedSolution& sol, GramCache& cache, int m_target) {
  while (sol.rank() < m_target) {
    auto mode = compute_next_mode(cache, sol, cache.spec->solver.k_max);
    if (!mode) return false;
    const double energy = mode_energy(cache, *mode);
    if (sol.rank() == 0) {
      if (energy <= 0.0) return false;
      sol.first_mode_energy = energy;
    } else if (energy <= 1e-12 * sol.first_mode_energy) {
      return false;  // residual loading exhausted
    }
    sol.modes.push_back(std::move(*mode));
    cache_append_mode(cache, sol.modes.back());
  }
  return true;
}

SeparatedSolution run_pgd(std::shared_ptr<const ProblemSpec> spec, int m_max,
                          std::shared_ptr<const SpaceMesh> mesh,
                          std::shared_ptr<const TimeGrid> grid) {
  if (m_max < 1) throw std::invalid_argument("m_max must be at least 1");
  SeparatedSolution sol;
  sol.problem = spec;
  sol.current_mesh = mesh;
  sol.current_grid = grid;
  GramCache cache = build_cache(spec, mesh, grid, sol);
  extend_pgd(sol, cache, m_max);
  return sol;
}

SeparatedSolution run_pgd(std::shared_ptr<const ProblemSpec> spec, int m_max) {
  return run_pgd(spec, m_max, build_initial_mesh(*spec), build_initial_grid(*spec));
}

double evaluate(const SeparatedSolution& sol, double x, double y, double t,
                const Eigen::VectorXd& p) {
  const auto& spec = *sol.problem;
  if (!spec.steady && (t < -1e-12 || t > spec.horizon + 1e-12))
    throw std::out_of_range("time outside [0, T]");
  double acc = 0.0;
  double phi[4];
  for (const auto& mode : sol.modes) {
    const int e = mode.mesh->find_element(x, y);
    shape_values(*mode.mesh, e, x, y, phi);
    double v = 0.0;
    for (int c = 0; c < mode.mesh->n_corners(); ++c)
      v += phi[c] * mode.psi[mode.mesh->elements[e][c]];
    if (!spec.steady) v *= TimeFn::nodal(mode.grid->nodes, mode.lam).eval(t);
    for (int j = 0; j < spec.n_axes(); ++j) {
      const auto& g = spec.parameters[j].grid;
      if (p[j] < g[0] - 1e-12 || p[j] > g[g.size() - 1] + 1e-12)
        throw std::out_of_range("parameter outside its grid range");
      v *= TabulatedFn{g, mode.gammas[j]}.eval(p[j]);
    }
    acc += v;
  }
  return acc;
}

double residual_tensor_norm(const GramCache& cache) {
  const auto& spec = *cache.spec;
  const int S = cache.n_loads();
  const int m = cache.m;
  const int np = spec.n_axes();
  const bool steady = spec.steady;
  const double c0 = spec.coeff_c.base, k0 = spec.coeff_k.base, r0 = spec.coeff_r.base;

  struct Term {
    Eigen::VectorXd space;
    Eigen::VectorXd time;
    std::vector<Eigen::VectorXd> params;
  };
  std::vector<Term> terms;
  const Eigen::VectorXd* t = steady ? nullptr : cache.grid->nodes.get();

  for (int s = 0; s < S; ++s) {
    Term T;
    T.space = cache.ops.F[s];
    if (!steady) T.time = hat_products_alpha(*t, spec.loads[s].alpha);
    for (int j = 0; j < np; ++j) T.params.push_back(cache.axes[j].beta_vals.row(s).transpose());
    terms.push_back(std::move(T));
  }
  for (int i = 0; i < m; ++i) {
    if (!steady && c0 != 0.0) {
      Term T;
      T.space = -c0 * cache.m_psi.col(i);
      T.time = hat_products_deriv(*t, cache.lam.col(i));
      for (int j = 0; j < np; ++j)
        T.params.push_back(cache.axes[j].c_vals.cwiseProduct(cache.axes[j].gamma.col(i)));
      terms.push_back(std::move(T));
    }
    {
      Term T;
      T.space = -k0 * cache.k_psi.col(i);
      if (!steady) T.time = hat_products_nodal(*t, cache.lam.col(i));
      for (int j = 0; j < np; ++j)
        T.params.push_back(cache.axes[j].k_vals.cwiseProduct(cache.axes[j].gamma.col(i)));
      terms.push_back(std::move(T));
    }
    if (r0 != 0.0) {
      Term T;
      T.space = -r0 * cache.m_psi.col(i);
      if (!steady) T.time = hat_products_nodal(*t, cache.lam.col(i));
      for (int j = 0; j < np; ++j)
        T.params.push_back(cache.axes[j].r_vals.cwiseProduct(cache.axes[j].gamma.col(i)));
      terms.push_back(std::move(T));
    }
  }

  double acc = 0.0;
  for (size_t a = 0; a < terms.size(); ++a)
    for (size_t b = 0; b < terms.size(); ++b) {
      double v = terms[a].space.dot(terms[b].space);
      if (!steady) v *= terms[a].time.dot(terms[b].time);
      for (int j = 0; j < np; ++j)
        v *= grid_product_integral(spec.parameters[j].grid,
                                   {&terms[a].params[j], &terms[b].params[j]});
      acc += v;
    }
  return std::sqrt(std::max(acc, 0.0));
}

double space_property_residual(const GramCache& cache, int m0) {
  const auto& spec = *cache.spec;
  const int S = cache.n_loads();
  const int np = spec.n_axes();
  const double c0 = spec.coeff_c.base, k0 = spec.coeff_k.base, r0 = spec.coeff_r.base;
  const bool steady = spec.steady;

  Eigen::VectorXd res = Eigen::VectorXd::Zero(cache.ops.n_free);
  double scale = 0.0;
  for (int i = 0; i <= m0; ++i) {
    double pc = c0, pk = k0, pr = r0;
    for (int j = 0; j < np; ++j) {
      pc *= cache.axes[j].gc(i, m0);
      pk *= cache.axes[j].gk(i, m0);
      pr *= cache.axes[j].gr(i, m0);
    }
    const double dl = steady ? 0.0 : cache.dlam_lam(i, m0);
    const double l2 = steady ? 1.0 : cache.lam_lam(i, m0);
    const Eigen::VectorXd term =
        (pc * dl + pr * l2) * cache.m_psi.col(i) + pk * l2 * cache.k_psi.col(i);
    res += term;
    scale = std::max(scale, term.norm());
  }
  for (int s = 0; s < S; ++s) {
    double pb = steady ? 1.0 : cache.alpha_lam(s, m0);
    for (int j = 0; j < np; ++j) pb *= cache.axes[j].beta_gamma(s, m0);
    res -= pb * cache.ops.F[s];
    scale = std::max(scale, std::abs(pb) * cache.ops.F[s].norm());
  }
  return res.norm() / std::max(scale, 1e-300);
}

std::string dump_solution_json(const SeparatedSolution& sol) {
  nlohmann::json j;
  j["rank"] = sol.rank();
  j["steady"] = sol.problem->steady;
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& mode : sol.modes) {
    nlohmann::json mj;
    mj["psi"] = std::vector<double>(mode.psi.data(), mode.psi.data() + mode.psi.size());
    mj["mesh"] = {{"nodes", mode.mesh->n_nodes()}, {"elements", mode.mesh->n_elements()}};
    if (mode.lam.size()) {
      mj["lam"] = std::vector<double>(mode.lam.data(), mode.lam.data() + mode.lam.size());
      mj["grid"] = {{"intervals", mode.grid->n_intervals()}};
    }
    for (size_t a = 0; a < mode.gammas.size(); ++a)
      mj["gamma_" + sol.problem->parameters[a].name] = std::vector<double>(
          mode.gammas[a].data(), mode.gammas[a].data() + mode.gammas[a].size());
    modes.push_back(mj);
  }
  j["modes"] = modes;
  return j.dump(2) + "\n";
}

}  // namespace pgdcert
