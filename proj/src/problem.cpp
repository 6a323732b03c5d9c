// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/problem.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pgdcert {

using nlohmann::json;

void ParameterAxis::build_grid() {
  const double lo = min_open ? std::max(p_min, 0.01 * p_max) : p_min;
  grid = Eigen::VectorXd::LinSpaced(count, lo, p_max);
}

double ParamScalar::eval(const Eigen::VectorXd& p) const {
  double v = base;
  for (const auto& f : factors) v *= f.fn.eval(p[f.axis]);
  return v;
}

double ParamScalar::axis_factor(int axis, double pj) const {
  for (const auto& f : factors)
    if (f.axis == axis) return f.fn.eval(pj);
  return 1.0;
}

double LoadTerm::beta_eval(const Eigen::VectorXd& p) const {
  double v = 1.0;
  for (const auto& f : beta) v *= f.fn.eval(p[f.axis]);
  return v;
}

double LoadTerm::beta_axis_factor(int axis, double pj) const {
  for (const auto& f : beta)
    if (f.axis == axis) return f.fn.eval(pj);
  return 1.0;
}

int ProblemSpec::axis_index(const std::string& name) const {
  for (size_t j = 0; j < parameters.size(); ++j)
    if (parameters[j].name == name) return static_cast<int>(j);
  return -1;
}

namespace {

ScalarFn parse_scalar_fn(const json& j, const std::string& var, const std::string& where) {
  if (j.is_number()) return ScalarFn::constant(j.get<double>());
  if (j.is_object() && j.contains("expr")) {
    ScalarFn f = ScalarFn::expr(j.at("expr").get<std::string>(), var);
    for (const auto& v : std::get<Expression>(f.fn).variables())
      if (v != var)
        throw std::invalid_argument(where + ": expression may only use '" + var + "', found '" +
                                    v + "'");
    return f;
  }
  if (j.is_object() && j.contains("table")) {
    const auto& t = j.at("table");
    auto xs = t.at("t").get<std::vector<double>>();
    auto vs = t.at("v").get<std::vector<double>>();
    return ScalarFn::table(Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size()),
                           Eigen::Map<Eigen::VectorXd>(vs.data(), vs.size()));
  }
  throw std::invalid_argument(where + ": function must be a number, {\"expr\":...} or {\"table\":...}");
}

Expression parse_space_expr(const json& j, int dim, const std::string& where) {
  std::string src;
  if (j.is_number())
    src = std::to_string(j.get<double>());
  else if (j.is_object() && j.contains("expr"))
    src = j.at("expr").get<std::string>();
  else
    throw std::invalid_argument(where + ": space density must be a number or {\"expr\":...}");
  Expression e = Expression::parse(src);
  for (const auto& v : e.variables()) {
    if (v == "x") continue;
    if (v == "y" && dim == 2) continue;
    throw std::invalid_argument(where + ": unknown space variable '" + v + "'");
  }
  return e;
}

ParamScalar parse_coefficient(const json& j, const ProblemSpec& spec, const std::string& name) {
  ParamScalar c;
  if (j.is_number()) {
    c.base = j.get<double>();
    return c;
  }
  c.base = j.value("base", 1.0);
  if (j.contains("factors")) {
    for (const auto& fj : j.at("factors")) {
      ParamScalar::Factor f;
      const std::string axis = fj.at("axis").get<std::string>();
      f.axis = spec.axis_index(axis);
      if (f.axis < 0)
        throw std::invalid_argument("coefficient " + name + ": unknown parameter axis '" + axis +
                                    "'");
      f.fn = parse_scalar_fn(fj, "p", "coefficient " + name);
      c.factors.push_back(std::move(f));
    }
  }
  return c;
}

json scalar_fn_to_json(const ScalarFn& f) {
  if (f.is_expr()) return json{{"expr", std::get<Expression>(f.fn).source()}};
  const auto& t = std::get<TabulatedFn>(f.fn);
  std::vector<double> xs(t.x.data(), t.x.data() + t.x.size());
  std::vector<double> vs(t.v.data(), t.v.data() + t.v.size());
  return json{{"table", {{"t", xs}, {"v", vs}}}};
}

}  // namespace

ProblemSpec parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("problem file syntax error: ") + e.what());
  }

  ProblemSpec spec;

  // parameters first: coefficients and loads reference axes by name
  if (j.contains("parameters")) {
    for (const auto& pj : j.at("parameters")) {
      ParameterAxis ax;
      ax.name = pj.at("name").get<std::string>();
      ax.p_min = pj.at("min").get<double>();
      ax.p_max = pj.at("max").get<double>();
      ax.min_open = pj.value("min_open", false);
      ax.count = pj.value("count", 100);
      if (ax.count < 2) throw std::invalid_argument("parameter axis grid needs count >= 2");
      ax.build_grid();
      spec.parameters.push_back(std::move(ax));
    }
  }

  const auto& dj = j.at("domain");
  const std::string kind = dj.at("kind").get<std::string>();
  if (kind == "interval") {
    IntervalDomain d;
    d.length = dj.at("length").get<double>();
    d.initial_elements = dj.value("elements", 20);
    spec.domain = d;
  } else if (kind == "quad_grid") {
    QuadGridDomain d;
    d.width = dj.at("width").get<double>();
    d.height = dj.at("height").get<double>();
    d.nx = dj.at("nx").get<int>();
    d.ny = dj.at("ny").get<int>();
    if (dj.contains("holes"))
      for (const auto& hj : dj.at("holes"))
        d.holes.push_back({hj.at("x0").get<double>(), hj.at("y0").get<double>(),
                           hj.at("x1").get<double>(), hj.at("y1").get<double>()});
    spec.domain = d;
  } else {
    throw std::invalid_argument("domain kind must be 'interval' or 'quad_grid'");
  }

  const auto& tj = j.at("time");
  spec.steady = tj.value("steady", false);
  if (!spec.steady) {
    spec.horizon = tj.at("horizon").get<double>();
    spec.time_steps = tj.value("steps", 10);
  }

  spec.dirichlet_tags = j.value("dirichlet", std::vector<std::string>{});
  spec.neumann_tags = j.value("neumann", std::vector<std::string>{});

  const auto& cj = j.at("coefficients");
  spec.coeff_k = parse_coefficient(cj.at("k"), spec, "k");
  spec.coeff_c = cj.contains("c") ? parse_coefficient(cj.at("c"), spec, "c") : ParamScalar{};
  spec.coeff_r = cj.contains("r") ? parse_coefficient(cj.at("r"), spec, "r") : ParamScalar{};

  if (j.contains("loads")) {
    for (const auto& lj : j.at("loads")) {
      LoadTerm load;
      load.alpha = lj.contains("alpha") ? parse_scalar_fn(lj.at("alpha"), "t", "load alpha")
                                        : ScalarFn::constant(1.0);
      if (lj.contains("beta")) {
        for (const auto& bj : lj.at("beta")) {
          ParamScalar::Factor f;
          const std::string axis = bj.at("axis").get<std::string>();
          f.axis = spec.axis_index(axis);
          if (f.axis < 0) throw std::invalid_argument("load beta: unknown axis '" + axis + "'");
          f.fn = parse_scalar_fn(bj, "p", "load beta");
          load.beta.push_back(std::move(f));
        }
      }
      if (lj.contains("f")) load.body = parse_space_expr(lj.at("f"), spec.dim(), "load f");
      if (lj.contains("g")) {
        LoadTerm::FluxBC bc;
        bc.g = parse_space_expr(lj.at("g"), spec.dim(), "load g");
        bc.tags = lj.value("tags", spec.neumann_tags);
        load.flux = std::move(bc);
      }
      spec.loads.push_back(std::move(load));
    }
  }

  if (j.contains("qoi") && !j.at("qoi").is_null()) {
    const auto& qj = j.at("qoi");
    QoISpec q;
    if (qj.contains("region_average")) {
      const auto& r = qj.at("region_average");
      QoISpec::RegionAverage ra;
      ra.x0 = r.at("x0").get<double>();
      ra.y0 = spec.dim() == 2 ? r.at("y0").get<double>() : 0.0;
      ra.x1 = r.at("x1").get<double>();
      ra.y1 = spec.dim() == 2 ? r.at("y1").get<double>() : 0.0;
      q.space = ra;
    } else {
      QoISpec::ExtractionPair ep;
      if (qj.contains("f_sigma"))
        ep.f_sigma = parse_space_expr(qj.at("f_sigma"), spec.dim(), "qoi f_sigma");
      if (qj.contains("q_sigma")) {
        const auto& g = qj.at("q_sigma");
        ep.qx = parse_space_expr(g.at("x"), spec.dim(), "qoi q_sigma.x");
        if (spec.dim() == 2) ep.qy = parse_space_expr(g.at("y"), spec.dim(), "qoi q_sigma.y");
      }
      q.space = ep;
    }
    if (qj.contains("time") && qj.at("time").is_string() &&
        qj.at("time").get<std::string>() == "terminal")
      q.terminal = true;
    else if (qj.contains("time"))
      q.time_weight = parse_scalar_fn(qj.at("time"), "t", "qoi time weight");
    else
      q.terminal = true;
    spec.qoi = std::move(q);
  }

  if (j.contains("solver")) {
    const auto& sj = j.at("solver");
    spec.solver.m_max = sj.value("m_max", 5);
    spec.solver.k_max = sj.value("k_max", 4);
    spec.solver.seed = sj.value("seed", 42u);
    spec.solver.adjoint_extra_modes = sj.value("adjoint_extra_modes", 2);
    spec.solver.sweep_density = sj.value("sweep_density", 0);
    spec.solver.oracle_refine = sj.value("oracle_refine", 4);
  }
  if (j.contains("adaptivity")) {
    const auto& aj = j.at("adaptivity");
    spec.adaptivity.alpha = aj.value("alpha", 0.5);
    spec.adaptivity.gamma_tol = aj.value("gamma_tol", 0.0);
    spec.adaptivity.theta = aj.value("theta", 0.5);
    spec.adaptivity.local_2d = aj.value("local_2d", false);
    spec.adaptivity.max_steps = aj.value("max_steps", 50);
  }

  return validate(spec), spec;
}

const ProblemSpec& validate(const ProblemSpec& spec) {
  std::vector<std::string> errs;

  if (spec.dirichlet_tags.empty()) errs.push_back("no Dirichlet boundary (need u = 0 somewhere)");
  {
    std::set<std::string> d(spec.dirichlet_tags.begin(), spec.dirichlet_tags.end());
    for (const auto& t : spec.neumann_tags)
      if (d.count(t)) errs.push_back("boundary tag '" + t + "' is both Dirichlet and Neumann");
    // coverage of the boundary by the two parts
    std::set<std::string> all(d);
    all.insert(spec.neumann_tags.begin(), spec.neumann_tags.end());
    std::vector<std::string> expected;
    if (spec.dim() == 1)
      expected = {"left", "right"};
    else {
      expected = {"xmin", "xmax", "ymin", "ymax"};
      const auto& qd = std::get<QuadGridDomain>(spec.domain);
      for (size_t h = 0; h < qd.holes.size(); ++h) expected.push_back("hole" + std::to_string(h));
    }
    for (const auto& t : expected)
      if (!all.count(t)) errs.push_back("boundary tag '" + t + "' carries no condition");
  }

  if (spec.dim() == 2) {
    const auto& qd = std::get<QuadGridDomain>(spec.domain);
    const double hx = qd.width / qd.nx, hy = qd.height / qd.ny;
    for (const auto& h : qd.holes) {
      auto on_grid = [](double v, double step) {
        const double r = v / step;
        return std::abs(r - std::round(r)) < 1e-9;
      };
      if (!on_grid(h.x0, hx) || !on_grid(h.x1, hx) || !on_grid(h.y0, hy) || !on_grid(h.y1, hy))
        errs.push_back("hole edges must align with the cell grid");
    }
  }

  if (!spec.steady && spec.horizon <= 0) errs.push_back("final time must be positive");
  if (!spec.steady && spec.time_steps < 1) errs.push_back("need at least one time step");

  // coefficient signs over every parameter grid point (axes are
  // independent factors, so scanning each axis grid suffices)
  auto scan_sign = [&](const ParamScalar& c, const char* name, bool strictly_positive) {
    if (c.is_zero()) {
      if (strictly_positive) errs.push_back(std::string(name) + " coefficient must be positive");
      return;
    }
    double lo = c.base, hi = c.base;
    for (const auto& f : c.factors) {
      const auto& g = spec.parameters[f.axis].grid;
      double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double v = f.fn.eval(g[i]);
        if (!std::isfinite(v)) {
          errs.push_back(std::string(name) + " coefficient factor not finite on axis grid");
          return;
        }
        fmin = std::min(fmin, v);
        fmax = std::max(fmax, v);
      }
      const double cands[4] = {lo * fmin, lo * fmax, hi * fmin, hi * fmax};
      lo = *std::min_element(cands, cands + 4);
      hi = *std::max_element(cands, cands + 4);
    }
    if (strictly_positive && lo <= 0.0)
      errs.push_back(std::string(name) + " coefficient must be positive on the parameter grid");
    if (!strictly_positive && lo < 0.0)
      errs.push_back(std::string(name) + " coefficient must be nonnegative on the parameter grid");
  };
  scan_sign(spec.coeff_k, "diffusion", true);
  if (!spec.steady) scan_sign(spec.coeff_c, "evolution", true);
  if (!spec.coeff_r.is_zero()) scan_sign(spec.coeff_r, "reaction", false);

  for (size_t s = 0; s < spec.loads.size(); ++s) {
    const auto& l = spec.loads[s];
    if (!l.has_space_part())
      errs.push_back("load term " + std::to_string(s) + " has neither body nor flux density");
    if (!spec.steady) {
      // alpha finite over [0, T]
      for (int i = 0; i <= 64; ++i) {
        const double t = spec.horizon * i / 64.0;
        if (!std::isfinite(l.alpha.eval(t))) {
          errs.push_back("load term " + std::to_string(s) + " time factor not finite on [0,T]");
          break;
        }
      }
    }
  }

  for (const auto& ax : spec.parameters) {
    if (ax.count < 2) errs.push_back("axis '" + ax.name + "': grid needs at least 2 points");
    if (ax.grid.size() != ax.count) errs.push_back("axis '" + ax.name + "': grid not materialized");
    for (Eigen::Index i = 0; i + 1 < ax.grid.size(); ++i)
      if (!(ax.grid[i] < ax.grid[i + 1])) {
        errs.push_back("axis '" + ax.name + "': grid must increase strictly");
        break;
      }
    if (ax.grid.size() && (ax.grid[0] < ax.p_min - 1e-12 || ax.grid[ax.grid.size() - 1] > ax.p_max + 1e-12))
      errs.push_back("axis '" + ax.name + "': grid leaves [p_min, p_max]");
  }

  if (spec.qoi && std::holds_alternative<QoISpec::RegionAverage>(spec.qoi->space)) {
    const auto& ra = std::get<QoISpec::RegionAverage>(spec.qoi->space);
    if (spec.dim() == 2) {
      const auto& qd = std::get<QuadGridDomain>(spec.domain);
      const double hx = qd.width / qd.nx, hy = qd.height / qd.ny;
      auto on_grid = [](double v, double s) {
        return std::abs(v / s - std::round(v / s)) < 1e-9;
      };
      if (!on_grid(ra.x0, hx) || !on_grid(ra.x1, hx) || !on_grid(ra.y0, hy) || !on_grid(ra.y1, hy))
        errs.push_back("qoi region must be a union of whole coarse elements");
    }
  }

  if (!errs.empty()) {
    std::ostringstream os;
    os << "invalid problem:";
    for (const auto& e : errs) os << "\n  - " << e;
    throw std::invalid_argument(os.str());
  }
  return spec;
}

std::string serialize_problem(const ProblemSpec& spec) {
  json j;

  if (spec.dim() == 1) {
    const auto& d = std::get<IntervalDomain>(spec.domain);
    j["domain"] = {{"kind", "interval"}, {"length", d.length}, {"elements", d.initial_elements}};
  } else {
    const auto& d = std::get<QuadGridDomain>(spec.domain);
    json holes = json::array();
    for (const auto& h : d.holes)
      holes.push_back({{"x0", h.x0}, {"y0", h.y0}, {"x1", h.x1}, {"y1", h.y1}});
    j["domain"] = {{"kind", "quad_grid"}, {"width", d.width},  {"height", d.height},
                   {"nx", d.nx},          {"ny", d.ny},        {"holes", holes}};
  }

  j["time"] = spec.steady ? json{{"steady", true}}
                          : json{{"horizon", spec.horizon}, {"steps", spec.time_steps}};
  j["dirichlet"] = spec.dirichlet_tags;
  j["neumann"] = spec.neumann_tags;

  auto coeff_json = [&](const ParamScalar& c) {
    if (c.factors.empty()) return json(c.base);
    json f = json::array();
    for (const auto& fac : c.factors) {
      json fj = scalar_fn_to_json(fac.fn);
      fj["axis"] = spec.parameters[fac.axis].name;
      f.push_back(fj);
    }
    return json{{"base", c.base}, {"factors", f}};
  };
  j["coefficients"] = {{"c", coeff_json(spec.coeff_c)},
                       {"k", coeff_json(spec.coeff_k)},
                       {"r", coeff_json(spec.coeff_r)}};

  json loads = json::array();
  for (const auto& l : spec.loads) {
    json lj;
    lj["alpha"] = scalar_fn_to_json(l.alpha);
    if (!l.beta.empty()) {
      json b = json::array();
      for (const auto& fac : l.beta) {
        json fj = scalar_fn_to_json(fac.fn);
        fj["axis"] = spec.parameters[fac.axis].name;
        b.push_back(fj);
      }
      lj["beta"] = b;
    }
    if (!l.body.empty()) lj["f"] = {{"expr", l.body.source()}};
    if (l.flux) {
      lj["g"] = {{"expr", l.flux->g.source()}};
      lj["tags"] = l.flux->tags;
    }
    loads.push_back(lj);
  }
  j["loads"] = loads;

  json params = json::array();
  for (const auto& ax : spec.parameters)
    params.push_back({{"name", ax.name},
                      {"min", ax.p_min},
                      {"max", ax.p_max},
                      {"min_open", ax.min_open},
                      {"count", ax.count}});
  j["parameters"] = params;

  if (spec.qoi) {
    json qj;
    if (std::holds_alternative<QoISpec::RegionAverage>(spec.qoi->space)) {
      const auto& ra = std::get<QoISpec::RegionAverage>(spec.qoi->space);
      qj["region_average"] = {{"x0", ra.x0}, {"y0", ra.y0}, {"x1", ra.x1}, {"y1", ra.y1}};
    } else {
      const auto& ep = std::get<QoISpec::ExtractionPair>(spec.qoi->space);
      if (!ep.f_sigma.empty()) qj["f_sigma"] = {{"expr", ep.f_sigma.source()}};
      if (!ep.qx.empty()) {
        qj["q_sigma"]["x"] = {{"expr", ep.qx.source()}};
        if (!ep.qy.empty()) qj["q_sigma"]["y"] = {{"expr", ep.qy.source()}};
      }
    }
    if (spec.qoi->terminal)
      qj["time"] = "terminal";
    else
      qj["time"] = scalar_fn_to_json(spec.qoi->time_weight);
    j["qoi"] = qj;
  }

  j["solver"] = {{"m_max", spec.solver.m_max},
                 {"k_max", spec.solver.k_max},
                 {"seed", spec.solver.seed},
                 {"adjoint_extra_modes", spec.solver.adjoint_extra_modes},
                 {"sweep_density", spec.solver.sweep_density},
                 {"oracle_refine", spec.solver.oracle_refine}};
  j["adaptivity"] = {{"alpha", spec.adaptivity.alpha},
                     {"gamma_tol", spec.adaptivity.gamma_tol},
                     {"theta", spec.adaptivity.theta},
                     {"local_2d", spec.adaptivity.local_2d},
                     {"max_steps", spec.adaptivity.max_steps}};

  return j.dump(2) + "\n";
}

}  // namespace pgdcert
