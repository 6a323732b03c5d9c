// Copyright (c) the pgdcert developers. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef PGDCERT_MESH_HPP
#define PGDCERT_MESH_HPP

#include <Eigen/Core>
#include <array>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "pgdcert/problem.hpp"

namespace pgdcert {

/// Conforming-by-default space mesh of 2-node bars (1D) or axis-aligned
/// 4-node quads (2D). Refinement produces a new mesh nested in its
/// parent; 2D local refinement keeps meshes 1-irregular and records the
/// hanging mid-edge nodes as constraints.
struct SpaceMesh {
  int dim = 1;
  Eigen::MatrixXd nodes;  // n_nodes x dim

  // node ids per element: 1D {left, right}; 2D {SW, SE, NE, NW}
  std::vector<std::array<int, 4>> elements;

  struct BoundaryEdge {
    int element;
    std::array<int, 2> nodes;  // 1D: {node, -1}
    std::string tag;
  };
  std::vector<BoundaryEdge> boundary;

  std::vector<char> dirichlet_node;

  // hanging mid-edge node tied to the two ends of the coarse edge
  struct Constraint {
    int node;
    int master_a, master_b;
  };
  std::vector<Constraint> constraints;

  std::shared_ptr<const SpaceMesh> parent;
  std::vector<int> parent_element;               // per element, -1 at root
  std::vector<std::vector<int>> children_of;     // parent element -> child ids
  std::vector<int> refinement_level;             // per element

  int n_nodes() const { return static_cast<int>(nodes.rows()); }
  int n_elements() const { return static_cast<int>(elements.size()); }
  int n_corners() const { return dim == 1 ? 2 : 4; }

  // geometry of one element (x0[,y0] corner, hx[,hy] extents)
  struct Box {
    double x0 = 0, y0 = 0, hx = 0, hy = 0;
  };
  Box box(int e) const;
  double measure(int e) const;

  /// Element containing the point (ties resolved to the lower index);
  /// throws std::out_of_range when outside the domain.
  int find_element(double x, double y = 0.0) const;

  /// True if `this` is `ancestor` or a refinement descendant of it.
  bool descends_from(const SpaceMesh& ancestor) const;

  bool conforming() const { return constraints.empty(); }

  std::string dump_json() const;
};

/// Strictly increasing time nodes 0 = t_0 < ... < t_N = T.
struct TimeGrid {
  std::shared_ptr<const Eigen::VectorXd> nodes;
  std::shared_ptr<const TimeGrid> parent;

  int n_intervals() const { return static_cast<int>(nodes->size()) - 1; }
  double horizon() const { return (*nodes)(nodes->size() - 1); }
  bool descends_from(const TimeGrid& ancestor) const;
};

std::shared_ptr<const SpaceMesh> build_initial_mesh(const ProblemSpec& spec);
std::shared_ptr<const TimeGrid> build_initial_grid(const ProblemSpec& spec);

struct RefineMarks {
  bool uniform = false;
  std::vector<int> marked;  // element ids when not uniform
};

/// Nested dyadic refinement. `uniform` splits every element; a marked set
/// refines locally (1D always conforming; 2D inserts hanging-node
/// constraints and cascades to stay 1-irregular).
std::shared_ptr<const SpaceMesh> refine_space(std::shared_ptr<const SpaceMesh> mesh,
                                              const RefineMarks& marks);

std::shared_ptr<const TimeGrid> refine_time(std::shared_ptr<const TimeGrid> grid, int factor);

/// Exact interpolation of a piecewise-(bi)linear nodal field onto a
/// nested descendant mesh. Throws when `to` does not descend from `from`.
Eigen::VectorXd transfer_space(const Eigen::VectorXd& values, const SpaceMesh& from,
                               const SpaceMesh& to);

Eigen::VectorXd transfer_time(const Eigen::VectorXd& values, const TimeGrid& from,
                              const TimeGrid& to);

/// Q1/P1 shape values of element `e` at a physical point inside it.
void shape_values(const SpaceMesh& mesh, int e, double x, double y, double* out);

}  // namespace pgdcert

#endif
