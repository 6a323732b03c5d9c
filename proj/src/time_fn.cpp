// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/time_fn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pgdcert {

double TabulatedFn::eval(double s) const {
  const auto n = x.size();
  if (n == 0) throw std::logic_error("empty table");
  if (n == 1 || s <= x[0]) return v[0];
  if (s >= x[n - 1]) return v[n - 1];
  // binary search for the interval containing s
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    Eigen::Index mid = (lo + hi) / 2;
    if (x[mid] <= s)
      lo = mid;
    else
      hi = mid;
  }
  const double w = (s - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - w) * v[lo] + w * v[hi];
}

double ScalarFn::eval(double s) const {
  if (std::holds_alternative<Expression>(fn)) return std::get<Expression>(fn).eval1(var, s);
  if (std::holds_alternative<TabulatedFn>(fn)) return std::get<TabulatedFn>(fn).eval(s);
  throw std::logic_error("eval on empty scalar function");
}

ScalarFn ScalarFn::constant(double c) {
  ScalarFn f;
  f.fn = Expression::parse(std::to_string(c));
  return f;
}

ScalarFn ScalarFn::expr(const std::string& src, const std::string& var) {
  ScalarFn f;
  f.fn = Expression::parse(src);
  f.var = var;
  return f;
}

ScalarFn ScalarFn::table(Eigen::VectorXd x, Eigen::VectorXd v) {
  if (x.size() != v.size() || x.size() < 1)
    throw std::invalid_argument("table abscissas and values must have equal nonzero length");
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    if (!(x[i] < x[i + 1])) throw std::invalid_argument("table abscissas must increase strictly");
  ScalarFn f;
  TabulatedFn t;
  t.x = std::move(x);
  t.v = std::move(v);
  f.fn = std::move(t);
  return f;
}

TimeFn TimeFn::from_fn(ScalarFn f) {
  TimeFn t;
  t.kind_ = Kind::Fn;
  t.fn_ = std::move(f);
  return t;
}

TimeFn TimeFn::nodal(std::shared_ptr<const Eigen::VectorXd> grid_nodes, Eigen::VectorXd values) {
  if (!grid_nodes || grid_nodes->size() != values.size())
    throw std::invalid_argument("nodal time function: grid/value size mismatch");
  TimeFn t;
  t.kind_ = Kind::Nodal;
  t.grid_ = std::move(grid_nodes);
  t.values_ = std::move(values);
  return t;
}

TimeFn TimeFn::nodal_deriv(std::shared_ptr<const Eigen::VectorXd> grid_nodes,
                           Eigen::VectorXd values) {
  TimeFn t = nodal(std::move(grid_nodes), std::move(values));
  t.kind_ = Kind::NodalDeriv;
  return t;
}

TimeFn TimeFn::custom(std::function<double(double)> f,
                      std::shared_ptr<const Eigen::VectorXd> breakpoints) {
  TimeFn t;
  t.kind_ = Kind::Custom;
  t.custom_ = std::move(f);
  t.grid_ = std::move(breakpoints);
  return t;
}

double TimeFn::eval(double t) const {
  switch (kind_) {
    case Kind::Fn:
      return fn_.eval(t);
    case Kind::Custom:
      return custom_(t);
    case Kind::Nodal:
    case Kind::NodalDeriv: {
      const Eigen::VectorXd& g = *grid_;
      const auto n = g.size();
      Eigen::Index lo = 0, hi = n - 1;
      if (t <= g[0])
        hi = 1;
      else if (t >= g[n - 1])
        lo = n - 2;
      else {
        while (hi - lo > 1) {
          Eigen::Index mid = (lo + hi) / 2;
          if (g[mid] <= t)
            lo = mid;
          else
            hi = mid;
        }
      }
      const double h = g[hi] - g[lo];
      if (kind_ == Kind::NodalDeriv) return (values_[hi] - values_[lo]) / h;
      const double w = std::clamp((t - g[lo]) / h, 0.0, 1.0);
      return (1.0 - w) * values_[lo] + w * values_[hi];
    }
  }
  return 0.0;
}

const Eigen::VectorXd* TimeFn::breakpoints() const {
  if (kind_ == Kind::Fn) {
    if (std::holds_alternative<TabulatedFn>(fn_.fn)) return &std::get<TabulatedFn>(fn_.fn).x;
    return nullptr;
  }
  return grid_.get();  // Nodal, NodalDeriv and Custom all carry a grid
}

Eigen::VectorXd merge_breakpoints(const std::vector<const Eigen::VectorXd*>& sets, double t0,
                                  double t1) {
  std::vector<double> pts{t0, t1};
  for (const auto* s : sets) {
    if (!s) continue;
    for (Eigen::Index i = 0; i < s->size(); ++i) {
      const double t = (*s)[i];
      if (t > t0 && t < t1) pts.push_back(t);
    }
  }
  std::sort(pts.begin(), pts.end());
  std::vector<double> uniq;
  const double tol = 1e-14 * std::max(1.0, std::abs(t1 - t0));
  for (double t : pts)
    if (uniq.empty() || t - uniq.back() > tol) uniq.push_back(t);
  return Eigen::Map<Eigen::VectorXd>(uniq.data(), static_cast<Eigen::Index>(uniq.size()));
}

namespace {
// 3-point Gauss-Legendre on [0,1]
constexpr double kGaussX[3] = {0.11270166537925831, 0.5, 0.8872983346207417};
constexpr double kGaussW[3] = {0.2777777777777778, 0.4444444444444444, 0.2777777777777778};
}  // namespace

double integrate_time(const std::vector<const TimeFn*>& fns, double t0, double t1) {
  std::vector<const Eigen::VectorXd*> bps;
  for (const auto* f : fns) bps.push_back(f->breakpoints());
  const Eigen::VectorXd grid = merge_breakpoints(bps, t0, t1);
  double acc = 0.0;
  for (Eigen::Index n = 0; n + 1 < grid.size(); ++n) {
    const double a = grid[n], h = grid[n + 1] - grid[n];
    for (int q = 0; q < 3; ++q) {
      const double t = a + h * kGaussX[q];
      double prod = 1.0;
      for (const auto* f : fns) prod *= f->eval(t);
      acc += h * kGaussW[q] * prod;
    }
  }
  return acc;
}

double integrate_time_reversed(const TimeFn& f, const TimeFn& g_rev, double t0, double t1) {
  const double T = t1;
  std::vector<double> pts;
  if (const auto* b = g_rev.breakpoints()) {
    for (Eigen::Index i = 0; i < b->size(); ++i) pts.push_back(T - (*b)[i]);
  }
  std::sort(pts.begin(), pts.end());
  Eigen::VectorXd reflected =
      Eigen::Map<Eigen::VectorXd>(pts.data(), static_cast<Eigen::Index>(pts.size()));
  const Eigen::VectorXd grid = merge_breakpoints({f.breakpoints(), &reflected}, t0, t1);
  double acc = 0.0;
  for (Eigen::Index n = 0; n + 1 < grid.size(); ++n) {
    const double a = grid[n], h = grid[n + 1] - grid[n];
    for (int q = 0; q < 3; ++q) {
      const double t = a + h * kGaussX[q];
      acc += h * kGaussW[q] * f.eval(t) * g_rev.eval(T - t);
    }
  }
  return acc;
}

}  // namespace pgdcert
