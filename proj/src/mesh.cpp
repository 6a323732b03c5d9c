// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#include "pgdcert/mesh.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace pgdcert {

SpaceMesh::Box SpaceMesh::box(int e) const {
  Box b;
  const auto& el = elements[e];
  if (dim == 1) {
    b.x0 = nodes(el[0], 0);
    b.hx = nodes(el[1], 0) - b.x0;
  } else {
    b.x0 = nodes(el[0], 0);
    b.y0 = nodes(el[0], 1);
    b.hx = nodes(el[1], 0) - b.x0;
    b.hy = nodes(el[3], 1) - b.y0;
  }
  return b;
}

double SpaceMesh::measure(int e) const {
  const Box b = box(e);
  return dim == 1 ? b.hx : b.hx * b.hy;
}

int SpaceMesh::find_element(double x, double y) const {
  const double tol = 1e-12;
  if (parent) {
    const int pe = parent->find_element(x, y);
    const auto& kids = children_of[pe];
    for (int c : kids) {
      const Box b = box(c);
      if (x >= b.x0 - tol && x <= b.x0 + b.hx + tol &&
          (dim == 1 || (y >= b.y0 - tol && y <= b.y0 + b.hy + tol)))
        return c;
    }
    throw std::logic_error("refinement tree lookup failed");
  }
  // root: scan (root meshes are small)
  for (int e = 0; e < n_elements(); ++e) {
    const Box b = box(e);
    if (x >= b.x0 - tol && x <= b.x0 + b.hx + tol &&
        (dim == 1 || (y >= b.y0 - tol && y <= b.y0 + b.hy + tol)))
      return e;
  }
  throw std::out_of_range("point outside the domain");
}

bool SpaceMesh::descends_from(const SpaceMesh& ancestor) const {
  const SpaceMesh* m = this;
  while (m) {
    if (m == &ancestor) return true;
    m = m->parent.get();
  }
  return false;
}

bool TimeGrid::descends_from(const TimeGrid& ancestor) const {
  const TimeGrid* g = this;
  while (g) {
    if (g == &ancestor) return true;
    g = g->parent.get();
  }
  return false;
}

namespace {

bool tag_is_dirichlet(const ProblemSpec& spec, const std::string& tag) {
  return std::find(spec.dirichlet_tags.begin(), spec.dirichlet_tags.end(), tag) !=
         spec.dirichlet_tags.end();
}

void mark_dirichlet_nodes(SpaceMesh& mesh, const ProblemSpec& spec) {
  mesh.dirichlet_node.assign(mesh.n_nodes(), 0);
  for (const auto& be : mesh.boundary) {
    if (!tag_is_dirichlet(spec, be.tag)) continue;
    mesh.dirichlet_node[be.nodes[0]] = 1;
    if (be.nodes[1] >= 0) mesh.dirichlet_node[be.nodes[1]] = 1;
  }
}

}  // namespace

std::shared_ptr<const SpaceMesh> build_initial_mesh(const ProblemSpec& spec) {
  auto mesh = std::make_shared<SpaceMesh>();
  if (spec.dim() == 1) {
    const auto& d = std::get<IntervalDomain>(spec.domain);
    const int n = d.initial_elements;
    mesh->dim = 1;
    mesh->nodes = Eigen::VectorXd::LinSpaced(n + 1, 0.0, d.length);
    mesh->nodes.conservativeResize(n + 1, 1);
    for (int e = 0; e < n; ++e) mesh->elements.push_back({e, e + 1, -1, -1});
    mesh->boundary.push_back({0, {0, -1}, "left"});
    mesh->boundary.push_back({n - 1, {n, -1}, "right"});
  } else {
    const auto& d = std::get<QuadGridDomain>(spec.domain);
    mesh->dim = 2;
    const double hx = d.width / d.nx, hy = d.height / d.ny;
    auto in_hole = [&](int i, int j) {
      const double cx = (i + 0.5) * hx, cy = (j + 0.5) * hy;
      for (const auto& h : d.holes)
        if (cx > h.x0 && cx < h.x1 && cy > h.y0 && cy < h.y1) return true;
      return false;
    };
    std::vector<std::vector<int>> nid(d.nx + 1, std::vector<int>(d.ny + 1, -1));
    std::vector<std::array<double, 2>> coords;
    auto node = [&](int i, int j) {
      if (nid[i][j] < 0) {
        nid[i][j] = static_cast<int>(coords.size());
        coords.push_back({i * hx, j * hy});
      }
      return nid[i][j];
    };
    std::vector<std::vector<int>> cell(d.nx, std::vector<int>(d.ny, -1));
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        if (in_hole(i, j)) continue;
        cell[i][j] = mesh->n_elements();
        mesh->elements.push_back({node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)});
      }
    mesh->nodes.resize(coords.size(), 2);
    for (size_t n = 0; n < coords.size(); ++n) {
      mesh->nodes(n, 0) = coords[n][0];
      mesh->nodes(n, 1) = coords[n][1];
    }
    auto hole_index = [&](double cx, double cy) {
      for (size_t h = 0; h < d.holes.size(); ++h) {
        const auto& hh = d.holes[h];
        if (cx >= hh.x0 - 1e-12 && cx <= hh.x1 + 1e-12 && cy >= hh.y0 - 1e-12 &&
            cy <= hh.y1 + 1e-12)
          return static_cast<int>(h);
      }
      return -1;
    };
    for (int j = 0; j < d.ny; ++j)
      for (int i = 0; i < d.nx; ++i) {
        const int e = cell[i][j];
        if (e < 0) continue;
        const auto& el = mesh->elements[e];
        // bottom, right, top, left
        struct Side {
          int a, b;
          int ni, nj;  // neighbor cell offset
        };
        const Side sides[4] = {{el[0], el[1], 0, -1},
                               {el[1], el[2], 1, 0},
                               {el[3], el[2], 0, 1},
                               {el[0], el[3], -1, 0}};
        for (int s = 0; s < 4; ++s) {
          const int ni = i + sides[s].ni, nj = j + sides[s].nj;
          const bool outside = ni < 0 || nj < 0 || ni >= d.nx || nj >= d.ny;
          const bool hole = !outside && cell[ni][nj] < 0;
          if (!outside && !hole) continue;
          std::string tag;
          if (outside) {
            if (s == 0) tag = "ymin";
            if (s == 1) tag = "xmax";
            if (s == 2) tag = "ymax";
            if (s == 3) tag = "xmin";
          } else {
            const double cx = (ni + 0.5) * hx, cy = (nj + 0.5) * hy;
            tag = "hole" + std::to_string(hole_index(cx, cy));
          }
          mesh->boundary.push_back({e, {sides[s].a, sides[s].b}, tag});
        }
      }
  }
  mesh->parent_element.assign(mesh->n_elements(), -1);
  mesh->refinement_level.assign(mesh->n_elements(), 0);
  mark_dirichlet_nodes(*mesh, spec);
  return mesh;
}

std::shared_ptr<const TimeGrid> build_initial_grid(const ProblemSpec& spec) {
  auto g = std::make_shared<TimeGrid>();
  const int n = spec.steady ? 1 : spec.time_steps;
  const double T = spec.steady ? 1.0 : spec.horizon;
  g->nodes = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::LinSpaced(n + 1, 0.0, T));
  return g;
}

namespace {

// Key for deduplicating dyadically generated coordinates.
struct PointKey {
  long long x, y;
  bool operator<(const PointKey& o) const { return x < o.x || (x == o.x && y < o.y); }
};
PointKey key_of(double x, double y) {
  return {static_cast<long long>(std::llround(x * 1e12)),
          static_cast<long long>(std::llround(y * 1e12))};
}

struct Builder {
  const SpaceMesh& old;
  SpaceMesh out;
  std::map<PointKey, int> node_id;

  explicit Builder(const SpaceMesh& m) : old(m) {
    out.dim = m.dim;
    out.children_of.assign(m.n_elements(), {});
    for (int n = 0; n < m.n_nodes(); ++n) {
      node_id[key_of(m.nodes(n, 0), m.dim == 2 ? m.nodes(n, 1) : 0.0)] = n;
    }
    out.nodes = m.nodes;
  }

  int node(double x, double y) {
    const PointKey k = key_of(x, y);
    auto it = node_id.find(k);
    if (it != node_id.end()) return it->second;
    const int id = static_cast<int>(out.nodes.rows());
    out.nodes.conservativeResize(id + 1, Eigen::NoChange);
    out.nodes(id, 0) = x;
    if (out.dim == 2) out.nodes(id, 1) = y;
    node_id[k] = id;
    return id;
  }

  int add_element(const std::array<int, 4>& el, int parent_e, int level) {
    const int id = static_cast<int>(out.elements.size());
    out.elements.push_back(el);
    out.parent_element.push_back(parent_e);
    out.refinement_level.push_back(level);
    out.children_of[parent_e].push_back(id);
    return id;
  }
};

}  // namespace

std::shared_ptr<const SpaceMesh> refine_space(std::shared_ptr<const SpaceMesh> mesh,
                                              const RefineMarks& marks) {
  const SpaceMesh& m = *mesh;
  std::vector<char> split(m.n_elements(), 0);
  if (marks.uniform) {
    std::fill(split.begin(), split.end(), 1);
  } else {
    for (int e : marks.marked) {
      if (e < 0 || e >= m.n_elements()) throw std::invalid_argument("marked element out of range");
      split[e] = 1;
    }
  }

  if (m.dim == 2 && !marks.uniform) {
    // cascade so neighbor levels differ by at most one
    std::map<PointKey, std::vector<int>> corner_elems;  // corner -> touching elements
    for (int e = 0; e < m.n_elements(); ++e)
      for (int c = 0; c < 4; ++c)
        corner_elems[key_of(m.nodes(m.elements[e][c], 0), m.nodes(m.elements[e][c], 1))].push_back(e);
    bool changed = true;
    while (changed) {
      changed = false;
      for (int e = 0; e < m.n_elements(); ++e) {
        if (!split[e]) continue;
        for (int c = 0; c < 4; ++c) {
          const auto& touching =
              corner_elems[key_of(m.nodes(m.elements[e][c], 0), m.nodes(m.elements[e][c], 1))];
          for (int o : touching) {
            if (!split[o] && m.refinement_level[o] < m.refinement_level[e]) {
              split[o] = 1;
              changed = true;
            }
          }
        }
      }
    }
  }

  Builder b(m);

  if (m.dim == 1) {
    for (int e = 0; e < m.n_elements(); ++e) {
      const auto& el = m.elements[e];
      if (!split[e]) {
        b.add_element(el, e, m.refinement_level[e]);
        continue;
      }
      const double xl = m.nodes(el[0], 0), xr = m.nodes(el[1], 0);
      const int mid = b.node(0.5 * (xl + xr), 0.0);
      b.add_element({el[0], mid, -1, -1}, e, m.refinement_level[e] + 1);
      b.add_element({mid, el[1], -1, -1}, e, m.refinement_level[e] + 1);
    }
  } else {
    for (int e = 0; e < m.n_elements(); ++e) {
      const auto& el = m.elements[e];
      if (!split[e]) {
        b.add_element(el, e, m.refinement_level[e]);
        continue;
      }
      const SpaceMesh::Box bx = m.box(e);
      const double xm = bx.x0 + 0.5 * bx.hx, ym = bx.y0 + 0.5 * bx.hy;
      const int s = b.node(xm, bx.y0), eN = b.node(bx.x0 + bx.hx, ym), n = b.node(xm, bx.y0 + bx.hy),
                w = b.node(bx.x0, ym), c = b.node(xm, ym);
      const int lvl = m.refinement_level[e] + 1;
      b.add_element({el[0], s, c, w}, e, lvl);
      b.add_element({s, el[1], eN, c}, e, lvl);
      b.add_element({c, eN, el[2], n}, e, lvl);
      b.add_element({w, c, n, el[3]}, e, lvl);
    }
  }

  SpaceMesh& out = b.out;
  out.parent = mesh;

  // boundary edges of the new mesh inherit the old tags
  for (const auto& be : m.boundary) {
    const auto& kids = out.children_of[be.element];
    if (m.dim == 1) {
      for (int c : kids) {
        const auto& el = out.elements[c];
        if (el[0] == be.nodes[0] || el[1] == be.nodes[0]) {
          out.boundary.push_back({c, {be.nodes[0], -1}, be.tag});
          break;
        }
      }
      continue;
    }
    // 2D: find child edges lying on the old edge segment
    const double ax = m.nodes(be.nodes[0], 0), ay = m.nodes(be.nodes[0], 1);
    const double bx2 = m.nodes(be.nodes[1], 0), by = m.nodes(be.nodes[1], 1);
    const bool vertical = std::abs(ax - bx2) < 1e-14;
    const double lo = vertical ? std::min(ay, by) : std::min(ax, bx2);
    const double hi = vertical ? std::max(ay, by) : std::max(ax, bx2);
    const double coord = vertical ? ax : ay;
    for (int c : kids) {
      const auto& el = out.elements[c];
      const int pairs[4][2] = {{el[0], el[1]}, {el[1], el[2]}, {el[3], el[2]}, {el[0], el[3]}};
      for (const auto& pr : pairs) {
        const double x1 = out.nodes(pr[0], 0), y1 = out.nodes(pr[0], 1);
        const double x2 = out.nodes(pr[1], 0), y2 = out.nodes(pr[1], 1);
        const bool v2 = std::abs(x1 - x2) < 1e-14;
        if (v2 != vertical) continue;
        const double c2 = vertical ? x1 : y1;
        if (std::abs(c2 - coord) > 1e-12) continue;
        const double l2 = vertical ? std::min(y1, y2) : std::min(x1, x2);
        const double h2 = vertical ? std::max(y1, y2) : std::max(x1, x2);
        if (l2 >= lo - 1e-12 && h2 <= hi + 1e-12)
          out.boundary.push_back({c, {pr[0], pr[1]}, be.tag});
      }
    }
  }

  // Dirichlet flags: inherited nodes keep theirs, new boundary nodes pick
  // up the tag of the edge they sit on.
  out.dirichlet_node.assign(out.n_nodes(), 0);
  for (int n = 0; n < m.n_nodes(); ++n) out.dirichlet_node[n] = m.dirichlet_node[n];
  std::set<std::string> dtags;
  for (const auto& be : m.boundary)
    if ((be.nodes[0] >= 0 && m.dirichlet_node[be.nodes[0]]) &&
        (be.nodes[1] < 0 || m.dirichlet_node[be.nodes[1]]))
      dtags.insert(be.tag);
  for (const auto& be : out.boundary)
    if (dtags.count(be.tag)) {
      out.dirichlet_node[be.nodes[0]] = 1;
      if (be.nodes[1] >= 0) out.dirichlet_node[be.nodes[1]] = 1;
    }

  // hanging nodes: mid-edge nodes of split 2D elements whose neighbor
  // across the edge was not split
  if (m.dim == 2 && !marks.uniform) {
    // collect edges of the new mesh per element, find mid nodes lying
    // strictly inside an unsplit neighbor's edge
    std::map<PointKey, int> new_mid;  // candidate hanging node -> (master_a, master_b) via edges
    std::map<PointKey, std::array<int, 2>> edge_of_mid;
    for (int e = 0; e < m.n_elements(); ++e) {
      if (split[e]) continue;
      const auto& el = m.elements[e];
      const int pairs[4][2] = {{el[0], el[1]}, {el[1], el[2]}, {el[3], el[2]}, {el[0], el[3]}};
      for (const auto& pr : pairs) {
        const double mx = 0.5 * (m.nodes(pr[0], 0) + m.nodes(pr[1], 0));
        const double my = 0.5 * (m.nodes(pr[0], 1) + m.nodes(pr[1], 1));
        const auto it = b.node_id.find(key_of(mx, my));
        if (it == b.node_id.end()) continue;
        if (it->second < m.n_nodes()) continue;  // existing node, already conforming
        edge_of_mid[key_of(mx, my)] = {pr[0], pr[1]};
      }
    }
    for (const auto& [k, masters] : edge_of_mid) {
      const int slave = b.node_id.at(k);
      out.constraints.push_back({slave, masters[0], masters[1]});
    }
  }

  return std::make_shared<const SpaceMesh>(std::move(out));
}

std::shared_ptr<const TimeGrid> refine_time(std::shared_ptr<const TimeGrid> grid, int factor) {
  if (factor < 2) throw std::invalid_argument("time refinement factor must be >= 2");
  const Eigen::VectorXd& t = *grid->nodes;
  Eigen::VectorXd out((t.size() - 1) * factor + 1);
  int k = 0;
  for (Eigen::Index n = 0; n + 1 < t.size(); ++n)
    for (int f = 0; f < factor; ++f) out[k++] = t[n] + (t[n + 1] - t[n]) * f / factor;
  out[k] = t[t.size() - 1];
  auto g = std::make_shared<TimeGrid>();
  g->nodes = std::make_shared<Eigen::VectorXd>(std::move(out));
  g->parent = grid;
  return g;
}

void shape_values(const SpaceMesh& mesh, int e, double x, double y, double* out) {
  const SpaceMesh::Box b = mesh.box(e);
  const double xi = (x - b.x0) / b.hx;
  if (mesh.dim == 1) {
    out[0] = 1.0 - xi;
    out[1] = xi;
    return;
  }
  const double eta = (y - b.y0) / b.hy;
  out[0] = (1 - xi) * (1 - eta);
  out[1] = xi * (1 - eta);
  out[2] = xi * eta;
  out[3] = (1 - xi) * eta;
}

Eigen::VectorXd transfer_space(const Eigen::VectorXd& values, const SpaceMesh& from,
                               const SpaceMesh& to) {
  if (&from == &to) return values;
  if (!to.descends_from(from)) throw std::invalid_argument("transfer target is not nested");
  if (values.size() != from.n_nodes()) throw std::invalid_argument("field/mesh size mismatch");
  Eigen::VectorXd out(to.n_nodes());
  double phi[4];
  for (int n = 0; n < to.n_nodes(); ++n) {
    const double x = to.nodes(n, 0), y = to.dim == 2 ? to.nodes(n, 1) : 0.0;
    const int e = from.find_element(x, y);
    shape_values(from, e, x, y, phi);
    double v = 0.0;
    for (int c = 0; c < from.n_corners(); ++c) v += phi[c] * values[from.elements[e][c]];
    out[n] = v;
  }
  return out;
}

Eigen::VectorXd transfer_time(const Eigen::VectorXd& values, const TimeGrid& from,
                              const TimeGrid& to) {
  if (&from == &to) return values;
  if (!to.descends_from(from)) throw std::invalid_argument("transfer target is not nested");
  const Eigen::VectorXd& tf = *from.nodes;
  if (values.size() != tf.size()) throw std::invalid_argument("field/grid size mismatch");
  TimeFn f = TimeFn::nodal(from.nodes, values);
  const Eigen::VectorXd& tt = *to.nodes;
  Eigen::VectorXd out(tt.size());
  for (Eigen::Index i = 0; i < tt.size(); ++i) out[i] = f.eval(tt[i]);
  return out;
}

std::string SpaceMesh::dump_json() const {
  nlohmann::json j;
  std::vector<std::vector<double>> ns;
  for (int n = 0; n < n_nodes(); ++n) {
    std::vector<double> c{nodes(n, 0)};
    if (dim == 2) c.push_back(nodes(n, 1));
    ns.push_back(c);
  }
  j["nodes"] = ns;
  std::vector<std::vector<int>> els;
  for (const auto& el : elements) {
    std::vector<int> e{el[0], el[1]};
    if (dim == 2) {
      e.push_back(el[2]);
      e.push_back(el[3]);
    }
    els.push_back(e);
  }
  j["elements"] = els;
  nlohmann::json bd = nlohmann::json::array();
  for (const auto& be : boundary)
    bd.push_back({{"element", be.element}, {"nodes", be.nodes}, {"tag", be.tag}});
  j["boundary"] = bd;
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : constraints)
    cs.push_back({{"node", c.node}, {"masters", {c.master_a, c.master_b}}});
  j["constraints"] = cs;
  j["parent"] = parent_element;
  return j.dump(2) + "\n";
}

}  // namespace pgdcert
