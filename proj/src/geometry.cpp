#include "grips/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

namespace grips {

void Domain::validate() const {
  for (int a = 0; a < kDim; ++a) {
    if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]))
      throw std::invalid_argument("domain bounds must be finite");
    if (!(lower[a] < upper[a]))
      throw std::invalid_argument("domain lower bound must be below upper bound on axis " +
                                  std::to_string(a));
  }
}

bool Domain::contains(const Point& p) const {
  for (int a = 0; a < kDim; ++a)
    if (!(p[a] >= lower[a] && p[a] <= upper[a])) return false;
  return true;
}

ReferenceGrid build_reference_grid(const Domain& domain,
                                   std::array<int, kDim> counts) {
  domain.validate();
  for (int a = 0; a < kDim; ++a)
    if (counts[a] < 2)
      throw std::invalid_argument("grid needs at least 2 points per axis");

  ReferenceGrid grid;
  grid.domain = domain;
  grid.counts = counts;
  for (int a = 0; a < kDim; ++a) {
    grid.axis[a].resize(counts[a]);
    for (int j = 0; j < counts[a]; ++j)
      grid.axis[a][j] = domain.lower[a] + domain.extent(a) * (j + 1) / counts[a];
  }
  grid.points.resize(static_cast<Eigen::Index>(counts[0]) * counts[1], kDim);
  for (int i0 = 0; i0 < counts[0]; ++i0)
    for (int i1 = 0; i1 < counts[1]; ++i1) {
      const int idx = grid.index(i0, i1);
      grid.points(idx, 0) = grid.axis[0][i0];
      grid.points(idx, 1) = grid.axis[1][i1];
    }
  return grid;
}

std::array<int, kDim> Tessellation::cell_of(const Point& p) const {
  if (!domain.contains(p))
    throw std::out_of_range("location (" + std::to_string(p[0]) + ", " +
                            std::to_string(p[1]) + ") outside the domain");
  std::array<int, kDim> c{};
  for (int a = 0; a < kDim; ++a) {
    const auto& b = bounds[a];
    // interior boundaries only; the last cell is closed on the right
    auto it = std::upper_bound(b.begin() + 1, b.end() - 1, p[a]);
    c[a] = static_cast<int>(it - (b.begin() + 1));
  }
  return c;
}

Tessellation tessellate(const ReferenceGrid& grid, const Points& observed,
                        std::array<int, kDim> splits) {
  Tessellation t;
  t.domain = grid.domain;
  t.splits = splits;
  t.grid_counts = grid.counts;
  for (int a = 0; a < kDim; ++a) {
    if (splits[a] < 1)
      throw std::invalid_argument("partition needs at least 1 interval per axis");
    const int n = grid.counts[a];
    const int m = splits[a];
    auto& b = t.bounds[a];
    b.resize(m + 1);
    b.front() = grid.domain.lower[a];
    b.back() = grid.domain.upper[a];
    std::vector<int> start(m + 1);
    for (int c = 0; c <= m; ++c)
      start[c] = static_cast<int>((static_cast<long long>(c) * n) / m);
    // cut halfway between the last coordinate of one cell and the first of the next
    for (int c = 1; c < m; ++c)
      b[c] = grid.domain.lower[a] + grid.domain.extent(a) * (start[c] + 0.5) / n;
    t.grid_axis_cell[a].resize(n);
    for (int c = 0; c < m; ++c)
      for (int j = start[c]; j < start[c + 1]; ++j) t.grid_axis_cell[a][j] = c;
  }

  t.reference_members.assign(t.n_cells(), {});
  t.observed_members.assign(t.n_cells(), {});
  for (int idx = 0; idx < static_cast<int>(grid.size()); ++idx) {
    const auto mi = grid.multi_index(idx);
    const int cell = t.linear(t.grid_axis_cell[0][mi[0]], t.grid_axis_cell[1][mi[1]]);
    t.reference_members[cell].push_back(idx);
  }
  t.observed_cell.resize(observed.rows());
  for (Eigen::Index i = 0; i < observed.rows(); ++i) {
    const auto c = t.cell_of(observed.row(i).transpose());
    const int cell = t.linear(c[0], c[1]);
    t.observed_cell[i] = cell;
    t.observed_members[cell].push_back(static_cast<int>(i));
  }
  return t;
}

int MeshDag::parent_slot(int child, int parent) const {
  const auto& p = parents[child];
  auto it = std::find(p.begin(), p.end(), parent);
  return it == p.end() ? -1 : static_cast<int>(it - p.begin());
}

MeshDag build_dag(const Tessellation& tess) {
  MeshDag dag;
  dag.splits = tess.splits;
  dag.cell_node.assign(tess.n_cells(), -1);
  for (int cell = 0; cell < tess.n_cells(); ++cell) {
    if (tess.reference_members[cell].empty()) continue;
    dag.cell_node[cell] = static_cast<int>(dag.node_cell.size());
    dag.node_cell.push_back(cell);
    dag.own_points.push_back(tess.reference_members[cell]);
  }
  if (dag.node_cell.empty()) throw std::invalid_argument("empty reference set");

  const std::size_t n = dag.node_cell.size();
  dag.parents.assign(n, {});
  dag.children.assign(n, {});
  for (std::size_t v = 0; v < n; ++v) {
    const auto c = tess.multi(dag.node_cell[v]);
    // nearest preceding nonempty cell along each axis
    for (int a = 0; a < kDim; ++a) {
      auto p = c;
      for (p[a] = c[a] - 1; p[a] >= 0; --p[a]) {
        const int u = dag.cell_node[tess.linear(p[0], p[1])];
        if (u >= 0) {
          dag.parents[v].push_back(u);
          dag.children[u].push_back(static_cast<int>(v));
          break;
        }
      }
    }
  }
  for (auto& ch : dag.children) std::sort(ch.begin(), ch.end());

  dag.parent_points.assign(n, {});
  dag.parent_offset.assign(n, {});
  for (std::size_t v = 0; v < n; ++v)
    for (int u : dag.parents[v]) {
      dag.parent_offset[v].push_back(static_cast<int>(dag.parent_points[v].size()));
      const auto& pts = dag.own_points[u];
      dag.parent_points[v].insert(dag.parent_points[v].end(), pts.begin(), pts.end());
    }

  dag.observed_of_node.assign(n, {});
  dag.observed_node.assign(tess.observed_cell.size(), -1);
  for (int cell = 0; cell < tess.n_cells(); ++cell) {
    const auto& members = tess.observed_members[cell];
    if (members.empty()) continue;
    const int v = dag.cell_node[cell];
    if (v < 0)
      throw std::invalid_argument(
          "observed locations fall in a cell without reference points; use fewer partition intervals");
    dag.nonref_parent.push_back(v);
    dag.nonref_members.push_back(members);
    for (int i : members) dag.observed_node[i] = v;
    dag.observed_of_node[v] = members;
  }
  return dag;
}

Coloring color_dag(const MeshDag& dag) {
  const std::size_t n = dag.n_reference();
  std::vector<std::set<int>> adj(n);
  for (std::size_t v = 0; v < n; ++v) {
    const auto& pa = dag.parents[v];
    for (std::size_t s = 0; s < pa.size(); ++s) {
      adj[v].insert(pa[s]);
      adj[pa[s]].insert(static_cast<int>(v));
      for (std::size_t t = s + 1; t < pa.size(); ++t) {
        adj[pa[s]].insert(pa[t]);
        adj[pa[t]].insert(pa[s]);
      }
    }
  }
  Coloring col;
  col.color.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<bool> used(adj[v].size() + 1, false);
    for (int u : adj[v])
      if (col.color[u] >= 0 && col.color[u] < static_cast<int>(used.size()))
        used[col.color[u]] = true;
    int c = 0;
    while (used[c]) ++c;
    col.color[v] = c;
    if (c >= col.count()) col.groups.resize(c + 1);
    col.groups[c].push_back(static_cast<int>(v));
  }
  return col;
}

namespace {

using PatternKey = std::vector<std::int64_t>;

void append_offsets(PatternKey& key, const ReferenceGrid& grid,
                    const std::vector<int>& pts, const Point& anchor) {
  key.push_back(static_cast<std::int64_t>(pts.size()));
  for (int idx : pts)
    for (int a = 0; a < kDim; ++a) {
      const double off = (grid.points(idx, a) - anchor[a]) / grid.domain.extent(a);
      key.push_back(std::llround(off * 1e9));
    }
}

int classify(std::map<PatternKey, int>& seen, std::vector<int>& reps,
             PatternKey key, int node) {
  auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(reps.size()));
  if (inserted) reps.push_back(node);
  return it->second;
}

} // namespace

Prototypes find_prototypes(const MeshDag& dag, const ReferenceGrid& grid) {
  Prototypes proto;
  std::map<PatternKey, int> cond_seen, own_seen;
  const std::size_t n = dag.n_reference();
  proto.conditioning_class.resize(n);
  proto.own_class.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    const Point anchor = grid.points.row(dag.own_points[v].front()).transpose();
    PatternKey own;
    append_offsets(own, grid, dag.own_points[v], anchor);
    PatternKey cond = own;
    for (int u : dag.parents[v]) append_offsets(cond, grid, dag.own_points[u], anchor);
    proto.own_class[v] = classify(own_seen, proto.own_rep, std::move(own), static_cast<int>(v));
    proto.conditioning_class[v] =
        classify(cond_seen, proto.conditioning_rep, std::move(cond), static_cast<int>(v));
  }
  return proto;
}

Mesh build_mesh(const Domain& domain, std::array<int, kDim> counts,
                std::array<int, kDim> splits, const Points& observed) {
  Mesh mesh;
  mesh.grid = build_reference_grid(domain, counts);
  mesh.tess = tessellate(mesh.grid, observed, splits);
  mesh.dag = build_dag(mesh.tess);
  mesh.coloring = color_dag(mesh.dag);
  mesh.prototypes = find_prototypes(mesh.dag, mesh.grid);
  mesh.observed = observed;
  return mesh;
}

bool is_acyclic(const MeshDag& dag) {
  const std::size_t n = dag.n_reference();
  std::vector<int> indeg(n);
  for (std::size_t v = 0; v < n; ++v) indeg[v] = static_cast<int>(dag.parents[v].size());
  std::queue<int> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(static_cast<int>(v));
  std::size_t visited = 0;
  while (!ready.empty()) {
    const int v = ready.front();
    ready.pop();
    ++visited;
    for (int c : dag.children[v])
      if (--indeg[c] == 0) ready.push(c);
  }
  return visited == n;
}

} // namespace grips
