#ifndef GRIPS_GEOMETRY_HPP
#define GRIPS_GEOMETRY_HPP

#include "grips/core.hpp"

#include <array>
#include <vector>

namespace grips {

/// Axis-aligned rectangle in two dimensions.
struct Domain {
  std::array<double, kDim> lower{0.0, 0.0};
  std::array<double, kDim> upper{1.0, 1.0};

  /// Throws std::invalid_argument on non-finite or inverted bounds.
  void validate() const;
  double extent(int axis) const { return upper[axis] - lower[axis]; }
  bool contains(const Point& p) const;
};

/// Regular reference grid: on axis a the coordinates are
/// lower + j/N_a * extent for j = 1..N_a. Points are stored row-major, the
/// last axis varying fastest.
struct ReferenceGrid {
  Domain domain;
  std::array<int, kDim> counts{0, 0};
  std::array<Vec, kDim> axis;
  Points points;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  int index(int i0, int i1) const { return i0 * counts[1] + i1; }
  std::array<int, kDim> multi_index(int idx) const {
    return {idx / counts[1], idx % counts[1]};
  }
};

ReferenceGrid build_reference_grid(const Domain& domain,
                                   std::array<int, kDim> counts);

/// Axis-parallel partition of the domain. Cells are half-open [low, high)
/// except the last cell on each axis, which is closed. Every cell holds the
/// same number of grid coordinates per axis (up to integer rounding).
struct Tessellation {
  Domain domain;
  std::array<int, kDim> splits{1, 1};
  std::array<int, kDim> grid_counts{0, 0};
  /// splits[a] + 1 boundaries per axis.
  std::array<std::vector<double>, kDim> bounds;
  /// Grid axis index -> cell axis index.
  std::array<std::vector<int>, kDim> grid_axis_cell;
  /// Per linear cell id: grid point indices (S_i) and observed indices (U_i).
  std::vector<std::vector<int>> reference_members;
  std::vector<std::vector<int>> observed_members;
  /// Linear cell id for every observed location.
  std::vector<int> observed_cell;

  int n_cells() const { return splits[0] * splits[1]; }
  int linear(int c0, int c1) const { return c0 * splits[1] + c1; }
  std::array<int, kDim> multi(int cell) const {
    return {cell / splits[1], cell % splits[1]};
  }
  /// Cell multi-index of an arbitrary location; throws std::out_of_range
  /// outside the domain.
  std::array<int, kDim> cell_of(const Point& p) const;
};

Tessellation tessellate(const ReferenceGrid& grid, const Points& observed,
                        std::array<int, kDim> splits);

/// Patterned DAG over the tessellation. Reference nodes are numbered in
/// row-major cell order, which is a topological order.
struct MeshDag {
  std::array<int, kDim> splits{1, 1};
  std::vector<int> node_cell;
  std::vector<int> cell_node; // -1 for cells without reference points
  std::vector<std::vector<int>> own_points;
  /// Axis-0 predecessor first, then axis-1 predecessor.
  std::vector<std::vector<int>> parents;
  std::vector<std::vector<int>> children;
  /// Concatenation of the parents' own points, in parent order.
  std::vector<std::vector<int>> parent_points;
  /// parent_offset[i][s]: start of parents[i][s] inside parent_points[i].
  std::vector<std::vector<int>> parent_offset;

  /// Non-reference nodes: one per cell holding observed locations. Their
  /// single parent is the reference node of the same cell.
  std::vector<int> nonref_parent;
  std::vector<std::vector<int>> nonref_members;
  /// Observed location -> reference node of its cell.
  std::vector<int> observed_node;
  /// Reference node -> observed locations in its cell (T_i).
  std::vector<std::vector<int>> observed_of_node;

  std::size_t n_reference() const { return node_cell.size(); }
  std::size_t n_nonreference() const { return nonref_parent.size(); }
  /// Position of `parent` inside parents[child], or -1.
  int parent_slot(int child, int parent) const;
};

MeshDag build_dag(const Tessellation& tess);

struct Coloring {
  std::vector<int> color;
  std::vector<std::vector<int>> groups; // nodes of each color, ascending

  int count() const { return static_cast<int>(groups.size()); }
};

/// Greedy coloring of the moral graph restricted to reference nodes.
Coloring color_dag(const MeshDag& dag);

/// Equivalence classes of reference nodes with congruent geometry.
/// `conditioning` groups nodes whose own and parent point patterns agree up
/// to translation; `own` groups nodes by own point pattern only.
struct Prototypes {
  std::vector<int> conditioning_class;
  std::vector<int> conditioning_rep;
  std::vector<int> own_class;
  std::vector<int> own_rep;

  int n_conditioning() const { return static_cast<int>(conditioning_rep.size()); }
  int n_own() const { return static_cast<int>(own_rep.size()); }
};

Prototypes find_prototypes(const MeshDag& dag, const ReferenceGrid& grid);

/// Everything the samplers need about the spatial layout.
struct Mesh {
  ReferenceGrid grid;
  Tessellation tess;
  MeshDag dag;
  Coloring coloring;
  Prototypes prototypes;
  Points observed;
};

Mesh build_mesh(const Domain& domain, std::array<int, kDim> counts,
                std::array<int, kDim> splits, const Points& observed);

/// Kahn traversal; returns false if the reference DAG has a cycle.
bool is_acyclic(const MeshDag& dag);

} // namespace grips

#endif // GRIPS_GEOMETRY_HPP
