#include "oracles.hpp"

#include "grips/geometry.hpp"
#include "grips/kernels.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace grips;

namespace {

Domain unit() { return Domain{}; }

Mesh grid_mesh(int side, int split, const Points& obs = Points(0, 2)) {
  return build_mesh(unit(), {side, side}, {split, split}, obs);
}

// every pair of nodes joined by an edge or sharing a child
std::set<std::pair<int, int>> moral_edges(const MeshDag& dag) {
  std::set<std::pair<int, int>> e;
  auto add = [&](int a, int b) { e.insert({std::min(a, b), std::max(a, b)}); };
  for (std::size_t v = 0; v < dag.n_reference(); ++v) {
    const auto& p = dag.parents[v];
    for (int u : p) add(u, static_cast<int>(v));
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t b = a + 1; b < p.size(); ++b) add(p[a], p[b]);
  }
  return e;
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("reference grid coordinates use j/N for j = 1..N") {
  const auto g = build_reference_grid(unit(), {2, 2});
  REQUIRE(g.size() == 4);
  const double want[4][2] = {{0.5, 0.5}, {0.5, 1.0}, {1.0, 0.5}, {1.0, 1.0}};
  for (int i = 0; i < 4; ++i) {
    CHECK(g.points(i, 0) == doctest::Approx(want[i][0]));
    CHECK(g.points(i, 1) == doctest::Approx(want[i][1]));
  }
  CHECK(build_reference_grid(unit(), {100, 100}).size() == 10000);
}

TEST_CASE("reference grid is row-major with the last axis fastest") {
  Domain d;
  d.lower = {-1.0, 2.0};
  d.upper = {2.0, 4.0};
  const auto g = build_reference_grid(d, {3, 2});
  REQUIRE(g.size() == 6);
  int idx = 0;
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 2; ++j, ++idx) {
      CHECK(g.points(idx, 0) == doctest::Approx(-1.0 + 3.0 * i / 3));
      CHECK(g.points(idx, 1) == doctest::Approx(2.0 + 2.0 * j / 2));
    }
}

TEST_CASE("invalid domains and counts are rejected") {
  Domain d;
  d.upper = {0.0, 1.0};
  CHECK_THROWS_AS(build_reference_grid(d, {4, 4}), std::invalid_argument);
  CHECK_THROWS_AS(build_reference_grid(unit(), {1, 4}), std::invalid_argument);
}

TEST_CASE("equal-count tessellation") {
  const auto g = build_reference_grid(unit(), {4, 4});
  const auto t = tessellate(g, Points(0, 2), {2, 2});
  REQUIRE(t.n_cells() == 4);
  for (const auto& m : t.reference_members) CHECK(m.size() == 4);

  const auto t2 = tessellate(build_reference_grid(unit(), {10, 7}), Points(0, 2), {3, 2});
  for (const auto& m : t2.reference_members) {
    CHECK(m.size() >= 3 * 3);
    CHECK(m.size() <= 4 * 4);
  }
}

TEST_CASE("a point at the domain center lands in exactly one cell") {
  const auto g = build_reference_grid(unit(), {4, 4});
  Points c(1, 2);
  c << 0.5, 0.5;
  const auto t = tessellate(g, c, {2, 2});
  int hits = 0;
  for (const auto& m : t.observed_members) hits += static_cast<int>(m.size());
  CHECK(hits == 1);
  // the cut sits between 0.5 and 0.75, so 0.5 is in the lower cell
  CHECK(t.observed_cell[0] == t.linear(0, 0));
}

TEST_CASE("observed counts add up") {
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Points obs(100, 2);
  for (int i = 0; i < 100; ++i) obs.row(i) << u(eng), u(eng);
  const auto t = tessellate(build_reference_grid(unit(), {20, 20}), obs, {5, 5});
  std::size_t total = 0;
  for (const auto& m : t.observed_members) total += m.size();
  CHECK(total == 100);
  Points out(1, 2);
  out << 1.5, 0.2;
  CHECK_THROWS_AS(tessellate(build_reference_grid(unit(), {4, 4}), out, {2, 2}),
                  std::out_of_range);
}

TEST_CASE("dag structure") {
  SUBCASE("1x1") {
    const auto m = grid_mesh(4, 1);
    REQUIRE(m.dag.n_reference() == 1);
    CHECK(m.dag.parents[0].empty());
  }
  SUBCASE("2x2") {
    const auto m = grid_mesh(4, 2);
    const auto& t = m.tess;
    auto node = [&](int a, int b) { return m.dag.cell_node[t.linear(a, b)]; };
    CHECK(m.dag.parents[node(0, 0)].empty());
    CHECK(m.dag.parents[node(1, 0)].size() == 1);
    CHECK(m.dag.parents[node(0, 1)].size() == 1);
    CHECK(m.dag.parents[node(1, 1)].size() == 2);
    std::size_t edges = 0;
    for (const auto& p : m.dag.parents) edges += p.size();
    CHECK(edges == 4);
    CHECK(m.dag.parents[node(1, 1)][0] == node(0, 1));
    CHECK(m.dag.parents[node(1, 1)][1] == node(1, 0));
  }
  SUBCASE("3x3") {
    const auto m = grid_mesh(9, 3);
    for (std::size_t v = 0; v < m.dag.n_reference(); ++v) {
      CHECK(m.dag.parents[v].size() <= 2);
      CHECK(m.dag.children[v].size() <= 2);
      for (int p : m.dag.parents[v]) CHECK(p < static_cast<int>(v));
    }
    CHECK(is_acyclic(m.dag));
  }
}

TEST_CASE("parent points concatenate parents in order") {
  const auto m = grid_mesh(6, 3);
  for (std::size_t v = 0; v < m.dag.n_reference(); ++v) {
    std::vector<int> cat;
    for (std::size_t s = 0; s < m.dag.parents[v].size(); ++s) {
      CHECK(m.dag.parent_offset[v][s] == static_cast<int>(cat.size()));
      const auto& own = m.dag.own_points[m.dag.parents[v][s]];
      cat.insert(cat.end(), own.begin(), own.end());
    }
    CHECK(cat == m.dag.parent_points[v]);
  }
}

TEST_CASE("coloring is valid on the moral graph") {
  CHECK(grid_mesh(4, 1).coloring.count() == 1);
  for (int split : {2, 4, 10}) {
    const auto m = grid_mesh(20, split);
    for (const auto& [a, b] : moral_edges(m.dag)) CHECK(m.coloring.color[a] != m.coloring.color[b]);
    CHECK(m.coloring.count() <= 4);
  }
  CHECK(grid_mesh(20, 10).coloring.count() == grid_mesh(20, 4).coloring.count());
}

TEST_CASE("prototype classes") {
  CHECK(grid_mesh(4, 1).prototypes.n_conditioning() == 1);
  const auto m = grid_mesh(16, 4);
  const auto& t = m.tess;
  std::set<int> interior;
  for (int a = 1; a < 4; ++a)
    for (int b = 1; b < 4; ++b) interior.insert(m.prototypes.conditioning_class[m.dag.cell_node[t.linear(a, b)]]);
  CHECK(interior.size() == 1);

  const MaternParams f{1.3, 4.0, 0.5};
  const Points& g = m.grid.points;
  for (int v = 0; v < static_cast<int>(m.dag.n_reference()); ++v) {
    const int rep = m.prototypes.conditioning_rep[m.prototypes.conditioning_class[v]];
    if (rep == v) continue;
    const auto mine = conditioning(gather(g, m.dag.own_points[v]), gather(g, m.dag.parent_points[v]), f);
    const auto theirs = conditioning(gather(g, m.dag.own_points[rep]),
                                     gather(g, m.dag.parent_points[rep]), f);
    CHECK((mine.H - theirs.H).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((mine.R - theirs.R).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dense covariances agree within a prototype class") {
  const auto m = grid_mesh(16, 4);
  const Points& g = m.grid.points;
  for (int v = 0; v < static_cast<int>(m.dag.n_reference()); ++v) {
    const int rep = m.prototypes.conditioning_rep[m.prototypes.conditioning_class[v]];
    std::vector<int> a = m.dag.own_points[v], b = m.dag.own_points[rep];
    a.insert(a.end(), m.dag.parent_points[v].begin(), m.dag.parent_points[v].end());
    b.insert(b.end(), m.dag.parent_points[rep].begin(), m.dag.parent_points[rep].end());
    const Mat ca = oracle::cov(gather(g, a), gather(g, a), 1.0, 3.0, 0.5);
    const Mat cb = oracle::cov(gather(g, b), gather(g, b), 1.0, 3.0, 0.5);
    CHECK((ca - cb).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("non-reference nodes follow the observed cells") {
  Points obs(3, 2);
  obs << 0.1, 0.1, 0.12, 0.3, 0.9, 0.9;
  const auto m = grid_mesh(8, 2, obs);
  CHECK(m.dag.n_nonreference() == 2);
  CHECK(m.dag.observed_node[0] == m.dag.observed_node[1]);
  CHECK(m.dag.observed_of_node[m.dag.observed_node[2]] == std::vector<int>{2});
}

}
