#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "icehouse/error.hpp"
#include "icehouse/exact.hpp"
#include "icehouse/quadgraph.hpp"
#include "icehouse/tutte.hpp"
#include "icehouse/weights.hpp"

namespace icehouse {

/// Connected plane graph given by a rotation system: each vertex lists its
/// darts in counterclockwise order, each edge is a pair of darts.
class PlaneGraph {
 public:
  PlaneGraph() = default;

  static PlaneGraph from_rotations(std::vector<std::vector<int>> rotations, std::vector<Edge> edges) {
    PlaneGraph pg;
    pg.rotations_ = std::move(rotations);
    pg.edges_ = std::move(edges);
    const std::size_t n_darts = 2 * pg.edges_.size();
    if (pg.rotations_.empty()) throw InvalidInstance("plane graph needs at least one vertex");
    pg.vertex_.assign(n_darts, -1);
    pg.position_.assign(n_darts, -1);
    pg.edge_.assign(n_darts, -1);
    for (std::size_t v = 0; v < pg.rotations_.size(); ++v) {
      const auto& cycle = pg.rotations_[v];
      for (std::size_t k = 0; k < cycle.size(); ++k) {
        const int d = cycle[k];
        if (d < 0 || static_cast<std::size_t>(d) >= n_darts) throw InvalidInstance("rotation dart " + std::to_string(d) + " out of range");
        if (pg.vertex_[static_cast<std::size_t>(d)] != -1) throw InvalidInstance("dart " + std::to_string(d) + " appears twice in rotations");
        pg.vertex_[static_cast<std::size_t>(d)] = static_cast<int>(v);
        pg.position_[static_cast<std::size_t>(d)] = static_cast<int>(k);
      }
    }
    for (std::size_t e = 0; e < pg.edges_.size(); ++e) {
      for (int d : {pg.edges_[e].first, pg.edges_[e].second}) {
        if (d < 0 || static_cast<std::size_t>(d) >= n_darts) throw InvalidInstance("edge dart " + std::to_string(d) + " out of range");
        if (pg.edge_[static_cast<std::size_t>(d)] != -1) throw InvalidInstance("dart " + std::to_string(d) + " used by two edges");
        pg.edge_[static_cast<std::size_t>(d)] = static_cast<int>(e);
      }
    }
    for (std::size_t d = 0; d < n_darts; ++d) {
      if (pg.vertex_[d] == -1) throw InvalidInstance("dart " + std::to_string(d) + " missing from rotations");
    }
    for (std::size_t v = 0; v < pg.rotations_.size(); ++v) {
      if (pg.rotations_[v].empty() && pg.rotations_.size() > 1) throw InvalidInstance("isolated vertex in plane graph");
    }
    if (!pg.connected()) throw InvalidInstance("plane graph is disconnected");
    if (pg.vertex_count() - pg.edge_count() + pg.face_count() != 2) {
      throw InvalidInstance("rotation system is not a planar embedding (Euler characteristic != 2)");
    }
    return pg;
  }

  int vertex_count() const { return static_cast<int>(rotations_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<std::vector<int>>& rotations() const { return rotations_; }
  const std::vector<Edge>& edges() const { return edges_; }

  int vertex_of(int dart) const { return vertex_[static_cast<std::size_t>(dart)]; }
  int edge_of(int dart) const { return edge_[static_cast<std::size_t>(dart)]; }
  int mate(int dart) const {
    const Edge& e = edges_[static_cast<std::size_t>(edge_of(dart))];
    return e.first == dart ? e.second : e.first;
  }
  /// Counterclockwise successor of a dart around its vertex.
  int next(int dart) const {
    const auto& cycle = rotations_[static_cast<std::size_t>(vertex_of(dart))];
    return cycle[(static_cast<std::size_t>(position_[static_cast<std::size_t>(dart)]) + 1) % cycle.size()];
  }

  /// Orbits of dart -> next(mate(dart)).
  int face_count() const {
    const std::size_t n = 2 * edges_.size();
    if (n == 0) return 1;
    std::vector<bool> seen(n, false);
    int faces = 0;
    for (std::size_t d = 0; d < n; ++d) {
      if (seen[d]) continue;
      ++faces;
      for (int x = static_cast<int>(d); !seen[static_cast<std::size_t>(x)]; x = next(mate(x))) seen[static_cast<std::size_t>(x)] = true;
    }
    return faces;
  }

  Multigraph abstract_graph() const {
    Multigraph g{vertex_count(), {}};
    for (const Edge& e : edges_) g.edges.emplace_back(vertex_of(e.first), vertex_of(e.second));
    return g;
  }

 private:
  bool connected() const {
    std::vector<int> parent(rotations_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      return v;
    };
    int components = vertex_count();
    for (const Edge& e : edges_) {
      const int a = find(vertex_of(e.first)), b = find(vertex_of(e.second));
      if (a != b) {
        parent[static_cast<std::size_t>(a)] = b;
        --components;
      }
    }
    return components == 1;
  }

  std::vector<std::vector<int>> rotations_;
  std::vector<Edge> edges_;
  std::vector<int> vertex_, position_, edge_;
};

/// Straight-line drawing helper: edge k gets darts 2k (at its first vertex)
/// and 2k+1; rotations sort darts by angle. Loops and parallel edges need
/// explicit rotations instead.
inline PlaneGraph plane_graph_from_drawing(const std::vector<std::pair<double, double>>& points,
                                           const std::vector<std::pair<int, int>>& segments) {
  std::vector<std::vector<int>> rotations(points.size());
  std::vector<Edge> edges;
  std::vector<double> angle(2 * segments.size());
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto [u, v] = segments[k];
    const auto& pu = points[static_cast<std::size_t>(u)];
    const auto& pv = points[static_cast<std::size_t>(v)];
    angle[2 * k] = std::atan2(pv.second - pu.second, pv.first - pu.first);
    angle[2 * k + 1] = std::atan2(pu.second - pv.second, pu.first - pv.first);
    rotations[static_cast<std::size_t>(u)].push_back(static_cast<int>(2 * k));
    rotations[static_cast<std::size_t>(v)].push_back(static_cast<int>(2 * k + 1));
    edges.push_back({static_cast<int>(2 * k), static_cast<int>(2 * k + 1)});
  }
  for (auto& cycle : rotations) {
    std::sort(cycle.begin(), cycle.end(), [&](int a, int b) { return angle[static_cast<std::size_t>(a)] < angle[static_cast<std::size_t>(b)]; });
  }
  return PlaneGraph::from_rotations(std::move(rotations), std::move(edges));
}

// Plane-graph files: {"rotations": [[dart, ...], ...], "edges": [[d, d'], ...]}

inline PlaneGraph plane_graph_from_json(const nlohmann::json& doc) {
  try {
    auto rotations = doc.at("rotations").get<std::vector<std::vector<int>>>();
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      if (e.size() != 2) throw InvalidInstance("plane edge must be [d, d']");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return PlaneGraph::from_rotations(std::move(rotations), std::move(edges));
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInstance(std::string("malformed plane graph: ") + ex.what());
  }
}

inline PlaneGraph load_plane_graph(std::string_view document) {
  try {
    return plane_graph_from_json(nlohmann::json::parse(document));
  } catch (const nlohmann::json::parse_error& ex) {
    throw InvalidInstance(std::string("malformed plane graph: ") + ex.what());
  }
}

inline nlohmann::json to_json(const PlaneGraph& pg) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : pg.edges()) edges.push_back({e.first, e.second});
  return {{"rotations", pg.rotations()}, {"edges", edges}};
}

// ---------------------------------------------------------------------------
// Medial graph

/// How the four medial darts around an edge e = (d, d') get roles. Corners
/// are named by the end (d or d') and the side (toward next or previous dart
/// in that end's rotation).
enum class MedialRoles {
  /// Roles 1..4 follow the counterclockwise order around the crossing point:
  /// (d, next), (d, prev), (d', next), (d', prev). Medial edges on the same
  /// side of e sit at adjacent roles, so pattern C is the alternating
  /// in/out/in/out configuration.
  counterclockwise,
  /// The two medial edges on the same side of e sit at opposite roles 1 and 3.
  same_side_opposite,
};

/// One medial vertex per edge of PG; each corner (d, next(d)) of PG becomes a
/// medial edge joining the next-side dart of d's edge and the prev-side dart
/// of next(d)'s edge. Medial edges are emitted in dart order of d.
inline QuadGraph medial_graph(const PlaneGraph& pg, MedialRoles convention = MedialRoles::counterclockwise) {
  auto role = [&](int dart, bool next_side) {
    const bool at_first = pg.edges()[static_cast<std::size_t>(pg.edge_of(dart))].first == dart;
    if (convention == MedialRoles::counterclockwise) {
      if (at_first) return next_side ? 1 : 2;
      return next_side ? 3 : 4;
    }
    if (at_first) return next_side ? 1 : 2;
    return next_side ? 4 : 3;
  };
  std::vector<std::pair<DartRef, DartRef>> pairs;
  const int n_darts = 2 * pg.edge_count();
  for (int d = 0; d < n_darts; ++d) {
    const int succ = pg.next(d);
    pairs.push_back({{pg.edge_of(d), role(d, true)}, {pg.edge_of(succ), role(succ, false)}});
  }
  return QuadGraph::from_pairs(pg.edge_count(), pairs);
}

/// One row of the Z(medial; 1,1,2) versus T(G; 3,3) table.
struct CrosscheckRow {
  std::string name;
  int vertices = 0;
  int edges = 0;
  int faces = 0;
  double z = 0.0;
  std::int64_t tutte = 0;
  double ratio = 0.0;
};

inline CrosscheckRow tutte_crosscheck(const PlaneGraph& pg, std::string name = {},
                                      MedialRoles convention = MedialRoles::counterclockwise) {
  CrosscheckRow row;
  row.name = std::move(name);
  row.vertices = pg.vertex_count();
  row.edges = pg.edge_count();
  row.faces = pg.face_count();
  row.z = enumerate_Z(medial_graph(pg, convention), Weights{1.0, 1.0, 2.0});
  row.tutte = tutte_eval_exact(pg.abstract_graph(), 3, 3);
  row.ratio = row.z / static_cast<double>(row.tutte);
  return row;
}

/// Small plane graphs used by the cross-check table.
inline std::vector<std::pair<std::string, PlaneGraph>> plane_graph_suite() {
  std::vector<std::pair<std::string, PlaneGraph>> suite;
  auto add = [&](std::string name, PlaneGraph pg) { suite.emplace_back(std::move(name), std::move(pg)); };
  add("loop", PlaneGraph::from_rotations({{0, 1}}, {{0, 1}}));
  add("bridge", plane_graph_from_drawing({{0, 0}, {1, 0}}, {{0, 1}}));
  add("digon", PlaneGraph::from_rotations({{0, 2}, {3, 1}}, {{0, 1}, {2, 3}}));
  add("two_loops", PlaneGraph::from_rotations({{0, 1, 2, 3}}, {{0, 1}, {2, 3}}));
  add("path2", plane_graph_from_drawing({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}}));
  add("triangle", plane_graph_from_drawing({{0, 0}, {1, 0}, {0, 1}}, {{0, 1}, {1, 2}, {2, 0}}));
  add("theta", PlaneGraph::from_rotations({{0, 2, 4}, {5, 3, 1}}, {{0, 1}, {2, 3}, {4, 5}}));
  add("square", plane_graph_from_drawing({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
  add("triangle_pendant", plane_graph_from_drawing({{0, 0}, {1, 0}, {0, 1}, {2, 0}}, {{0, 1}, {1, 2}, {2, 0}, {1, 3}}));
  add("k4", plane_graph_from_drawing({{0, 0}, {2, 0}, {1, 2}, {1, 0.7}}, {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}}));
  add("wheel4", plane_graph_from_drawing({{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}},
                                         {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {1, 4}, {2, 4}, {3, 4}}));
  return suite;
}

inline nlohmann::json crosscheck_json(const std::vector<CrosscheckRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.name}, {"vertices", r.vertices}, {"edges", r.edges}, {"faces", r.faces},
                   {"Z_medial_1_1_2", r.z}, {"T_3_3", r.tutte}, {"ratio", r.ratio}});
  }
  return out;
}

}  // namespace icehouse
