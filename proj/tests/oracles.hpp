#pragma once

// Test-only reference computations. None of these call the enumeration,
// transfer-matrix or deletion-contraction code they are used to check.

#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "icehouse/quadgraph.hpp"
#include "icehouse/tutte.hpp"
#include "icehouse/weights.hpp"

namespace oracle {

using icehouse::QuadGraph;
using icehouse::Weights;

/// Z by visiting all 2^|E| edge-bit vectors, no pruning.
inline double brute_force_Z(const QuadGraph& g, const Weights& w) {
  const int m = g.edge_count();
  double z = 0.0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(m));
    for (int e = 0; e < m; ++e) bits[static_cast<std::size_t>(e)] = (s >> e) & 1U;
    const auto o = icehouse::Orientation::from_edge_bits(g, bits);
    double prod = 1.0;
    for (int v = 0; v < g.vertex_count(); ++v) {
      const int x1 = o.dart_bits[4 * v], x2 = o.dart_bits[4 * v + 1], x3 = o.dart_bits[4 * v + 2], x4 = o.dart_bits[4 * v + 3];
      // Read straight off the 4x4 matrix [[0,0,0,a],[0,b,c,0],[0,c,b,0],[a,0,0,0]]
      // with rows x1x2 and columns x4x3.
      const double matrix[4][4] = {{0, 0, 0, w.a}, {0, w.b, w.c, 0}, {0, w.c, w.b, 0}, {w.a, 0, 0, 0}};
      prod *= matrix[2 * x1 + x2][2 * x4 + x3];
    }
    z += prod;
  }
  return z;
}

/// Number of ice-rule orientations, by direct out-degree counting.
inline std::uint64_t count_orientations(const QuadGraph& g) {
  const int m = g.edge_count();
  std::uint64_t n = 0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s) {
    std::vector<int> out(static_cast<std::size_t>(g.vertex_count()), 0);
    for (int e = 0; e < m; ++e) {
      const int tail = (s >> e) & 1U ? g.edge(e).first : g.edge(e).second;
      ++out[static_cast<std::size_t>(QuadGraph::vertex_of(tail))];
    }
    bool ok = true;
    for (int x : out) ok = ok && x == 2;
    n += ok;
  }
  return n;
}

/// Rank r(A) of an edge subset: vertices minus components of (V, A).
inline int rank_of(const icehouse::Multigraph& g, std::uint64_t subset) {
  std::vector<int> parent(static_cast<std::size_t>(g.vertex_count));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
    return v;
  };
  int rank = 0;
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    if (!((subset >> k) & 1U)) continue;
    const int a = find(g.edges[k].first), b = find(g.edges[k].second);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      ++rank;
    }
  }
  return rank;
}

/// T(G; x, y) = sum over A of (x-1)^{r(E)-r(A)} (y-1)^{|A|-r(A)}, in integers.
inline std::int64_t tutte_subset_expansion(const icehouse::Multigraph& g, std::int64_t x, std::int64_t y) {
  const auto m = g.edges.size();
  const int full = rank_of(g, (std::uint64_t{1} << m) - 1);
  auto ipow = [](std::int64_t base, int exp) {
    std::int64_t r = 1;
    while (exp-- > 0) r *= base;
    return r;
  };
  std::int64_t total = 0;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << m); ++a) {
    const int r = rank_of(g, a);
    const int size = std::popcount(a);
    total += ipow(x - 1, full - r) * ipow(y - 1, size - r);
  }
  return total;
}

/// Kirchhoff: determinant of the reduced Laplacian. Loops are ignored.
inline std::int64_t spanning_tree_count(const icehouse::Multigraph& g) {
  const int n = g.vertex_count;
  if (n == 1) return 1;
  std::vector<std::vector<long double>> lap(static_cast<std::size_t>(n), std::vector<long double>(static_cast<std::size_t>(n), 0));
  for (auto [u, v] : g.edges) {
    if (u == v) continue;
    lap[u][u] += 1;
    lap[v][v] += 1;
    lap[u][v] -= 1;
    lap[v][u] -= 1;
  }
  const int k = n - 1;
  long double det = 1;
  for (int c = 0; c < k; ++c) {
    int pivot = c;
    for (int r = c + 1; r < k; ++r) {
      if (std::fabs(lap[r][c]) > std::fabs(lap[pivot][c])) pivot = r;
    }
    if (std::fabs(lap[pivot][c]) < 1e-12L) return 0;
    if (pivot != c) {
      std::swap(lap[pivot], lap[c]);
      det = -det;
    }
    det *= lap[c][c];
    for (int r = c + 1; r < k; ++r) {
      const long double f = lap[r][c] / lap[c][c];
      for (int j = c; j < k; ++j) lap[r][j] -= f * lap[c][j];
    }
  }
  return static_cast<std::int64_t>(std::llround(det));
}

}  // namespace oracle

namespace fixtures {

/// One vertex, self-loops on darts (1,3) and (2,4).
inline icehouse::QuadGraph single_vertex() {
  return icehouse::QuadGraph::from_pairs(1, {{{0, 1}, {0, 3}}, {{0, 2}, {0, 4}}});
}

/// Two vertices, role r at u joined to role r at v for r = 1..4.
inline icehouse::QuadGraph four_parallel() {
  return icehouse::QuadGraph::from_pairs(2, {{{0, 1}, {1, 1}}, {{0, 2}, {1, 2}}, {{0, 3}, {1, 3}}, {{0, 4}, {1, 4}}});
}

}  // namespace fixtures
