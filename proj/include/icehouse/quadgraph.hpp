#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "icehouse/error.hpp"
#include "icehouse/rng.hpp"

namespace icehouse {

/// Local slot of a dart at its vertex. The numbering is the lattice one:
/// left, down, right, up, in counterclockwise order.
enum class Role : std::uint8_t { left = 1, down = 2, right = 3, up = 4 };

inline constexpr int role_index(Role r) { return static_cast<int>(r); }

struct Dart {
  int id = 0;
  int vertex = 0;
  Role role = Role::left;

  friend bool operator==(const Dart&, const Dart&) = default;
};

/// Unordered pair of darts. `first` is the reference end: an edge's
/// direction bit is the bit of its first dart.
struct Edge {
  int first = 0;
  int second = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Endpoint as written in instance files: a vertex and the role of the dart there.
struct DartRef {
  int vertex = 0;
  int role = 1;
};

/// 4-regular connected multigraph with explicit dart roles. Dart ids are
/// canonical: the dart with role r at vertex v has id 4v + r - 1.
class QuadGraph {
 public:
  QuadGraph() = default;

  /// Builds and validates. Throws InvalidInstance on any invariant violation.
  static QuadGraph from_pairs(int vertex_count, const std::vector<std::pair<DartRef, DartRef>>& pairs) {
    if (vertex_count < 1) throw InvalidInstance("graph needs at least one vertex");
    QuadGraph g;
    g.vertex_count_ = vertex_count;
    g.dart_edge_.assign(static_cast<std::size_t>(4 * vertex_count), -1);
    if (pairs.size() != static_cast<std::size_t>(2 * vertex_count)) {
      throw InvalidInstance("expected " + std::to_string(2 * vertex_count) + " edges, got " +
                            std::to_string(pairs.size()));
    }
    auto dart_id = [&](const DartRef& r) {
      if (r.vertex < 0 || r.vertex >= vertex_count) {
        throw InvalidInstance("vertex " + std::to_string(r.vertex) + " out of range");
      }
      if (r.role < 1 || r.role > 4) {
        throw InvalidInstance("role " + std::to_string(r.role) + " outside 1..4");
      }
      return 4 * r.vertex + r.role - 1;
    };
    for (const auto& [a, b] : pairs) {
      const int da = dart_id(a);
      const int db = dart_id(b);
      if (da == db) throw InvalidInstance("edge joins a dart to itself");
      for (int d : {da, db}) {
        if (g.dart_edge_[static_cast<std::size_t>(d)] != -1) {
          throw InvalidInstance("vertex " + std::to_string(d / 4) + " has two darts of role " +
                                std::to_string(d % 4 + 1));
        }
        g.dart_edge_[static_cast<std::size_t>(d)] = static_cast<int>(g.edges_.size());
      }
      g.edges_.push_back({da, db});
    }
    for (std::size_t d = 0; d < g.dart_edge_.size(); ++d) {
      if (g.dart_edge_[d] == -1) {
        throw InvalidInstance("dangling dart: vertex " + std::to_string(d / 4) + " role " +
                              std::to_string(d % 4 + 1));
      }
    }
    if (!g.connected()) throw InvalidInstance("graph is disconnected");
    return g;
  }

  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int dart_count() const { return 4 * vertex_count_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  static constexpr int dart_id(int vertex, Role role) { return 4 * vertex + role_index(role) - 1; }
  static constexpr int vertex_of(int dart) { return dart / 4; }
  static constexpr Role role_of(int dart) { return static_cast<Role>(dart % 4 + 1); }
  static Dart dart(int id) { return {id, vertex_of(id), role_of(id)}; }

  int edge_of(int dart) const { return dart_edge_[static_cast<std::size_t>(dart)]; }

  int mate(int dart) const {
    const Edge& e = edge(edge_of(dart));
    return e.first == dart ? e.second : e.first;
  }

  bool is_self_loop(int e) const { return vertex_of(edge(e).first) == vertex_of(edge(e).second); }

  friend bool operator==(const QuadGraph& x, const QuadGraph& y) {
    return x.vertex_count_ == y.vertex_count_ && x.edges_ == y.edges_;
  }

 private:
  bool connected() const {
    std::vector<int> parent(static_cast<std::size_t>(vertex_count_));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[static_cast<std::size_t>(v)] != v) {
        parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        v = parent[static_cast<std::size_t>(v)];
      }
      return v;
    };
    int components = vertex_count_;
    for (const Edge& e : edges_) {
      const int a = find(vertex_of(e.first));
      const int b = find(vertex_of(e.second));
      if (a != b) {
        parent[static_cast<std::size_t>(a)] = b;
        --components;
      }
    }
    return components == 1;
  }

  int vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> dart_edge_;
};

// ---------------------------------------------------------------------------
// Orientations and local patterns

/// One bit per dart; bit 1 means the edge leaves the dart's vertex through it.
struct Orientation {
  std::vector<std::uint8_t> dart_bits;

  /// From one bit per edge, read at the edge's first dart.
  static Orientation from_edge_bits(const QuadGraph& g, const std::vector<std::uint8_t>& edge_bits) {
    Orientation o;
    o.dart_bits.assign(static_cast<std::size_t>(g.dart_count()), 0);
    for (int e = 0; e < g.edge_count(); ++e) {
      const std::uint8_t bit = edge_bits[static_cast<std::size_t>(e)] & 1U;
      o.dart_bits[static_cast<std::size_t>(g.edge(e).first)] = bit;
      o.dart_bits[static_cast<std::size_t>(g.edge(e).second)] = bit ^ 1U;
    }
    return o;
  }

  std::vector<std::uint8_t> edge_bits(const QuadGraph& g) const {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(g.edge_count()));
    for (int e = 0; e < g.edge_count(); ++e) bits[static_cast<std::size_t>(e)] = dart_bits[static_cast<std::size_t>(g.edge(e).first)];
    return bits;
  }

  bool edge_consistent(const QuadGraph& g) const {
    if (dart_bits.size() != static_cast<std::size_t>(g.dart_count())) return false;
    return std::all_of(g.edges().begin(), g.edges().end(), [&](const Edge& e) {
      return dart_bits[static_cast<std::size_t>(e.first)] + dart_bits[static_cast<std::size_t>(e.second)] == 1;
    });
  }

  int out_degree(int vertex) const {
    int n = 0;
    for (int r = 0; r < 4; ++r) n += dart_bits[static_cast<std::size_t>(4 * vertex + r)];
    return n;
  }

  /// Edge consistency plus the ice rule at every vertex.
  bool is_valid(const QuadGraph& g) const {
    if (!edge_consistent(g)) return false;
    for (int v = 0; v < g.vertex_count(); ++v) {
      if (out_degree(v) != 2) return false;
    }
    return true;
  }

  Orientation reversed() const {
    Orientation o = *this;
    for (auto& b : o.dart_bits) b ^= 1U;
    return o;
  }

  friend auto operator<=>(const Orientation&, const Orientation&) = default;
};

/// Local configuration class at a vertex. Index 1 and 2 are arrow reversals of each other.
enum class PatternClass : std::uint8_t { A1, A2, B1, B2, C1, C2, INVALID };

/// Packs bits of the four darts as x1 x2 x3 x4, x1 most significant; this is
/// the index order of signature tables.
inline constexpr int pack_local(int x1, int x2, int x3, int x4) { return (x1 << 3) | (x2 << 2) | (x3 << 1) | x4; }

/// Bit position of role r inside a packed local index.
inline constexpr int role_bit(Role r) { return 1 << (4 - role_index(r)); }

inline constexpr PatternClass pattern_of_local(int local) {
  switch (local) {
    case 0b0011: return PatternClass::A1;
    case 0b1100: return PatternClass::A2;
    case 0b0110: return PatternClass::B1;
    case 0b1001: return PatternClass::B2;
    case 0b0101: return PatternClass::C1;
    case 0b1010: return PatternClass::C2;
    default: return PatternClass::INVALID;
  }
}

inline int local_index(const Orientation& o, int vertex) {
  const auto* b = &o.dart_bits[static_cast<std::size_t>(4 * vertex)];
  return pack_local(b[0], b[1], b[2], b[3]);
}

inline PatternClass vertex_pattern(const QuadGraph& g, const Orientation& o, int vertex) {
  (void)g;
  return pattern_of_local(local_index(o, vertex));
}

inline PatternClass reversed(PatternClass p) {
  switch (p) {
    case PatternClass::A1: return PatternClass::A2;
    case PatternClass::A2: return PatternClass::A1;
    case PatternClass::B1: return PatternClass::B2;
    case PatternClass::B2: return PatternClass::B1;
    case PatternClass::C1: return PatternClass::C2;
    case PatternClass::C2: return PatternClass::C1;
    default: return PatternClass::INVALID;
  }
}

inline const char* to_string(PatternClass p) {
  constexpr std::array<const char*, 7> names{"A1", "A2", "B1", "B2", "C1", "C2", "INVALID"};
  return names[static_cast<std::size_t>(p)];
}

// ---------------------------------------------------------------------------
// Generators

/// n x m torus. Vertex (i, j) has id i*m + j; its right dart meets the left
/// dart of (i, j+1) and its down dart meets the up dart of (i+1, j), indices mod n, m.
/// Edges are listed per vertex in row-major order: horizontal, then vertical.
inline QuadGraph torus_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw InvalidArgument("torus dimensions must be positive");
  std::vector<std::pair<DartRef, DartRef>> pairs;
  pairs.reserve(static_cast<std::size_t>(2 * rows * cols));
  auto id = [&](int i, int j) { return ((i % rows) * cols) + (j % cols); };
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      pairs.push_back({{id(i, j), role_index(Role::right)}, {id(i, j + 1), role_index(Role::left)}});
      pairs.push_back({{id(i, j), role_index(Role::down)}, {id(i + 1, j), role_index(Role::up)}});
    }
  }
  return QuadGraph::from_pairs(rows * cols, pairs);
}

/// Uniform perfect matching of the 4n darts, resampled until connected.
/// Edges are stored with the smaller dart first, sorted by first dart.
inline QuadGraph random_quad_graph(int n, std::uint64_t seed, int max_attempts = 100000) {
  if (n < 1) throw InvalidArgument("random_quad_graph needs n >= 1");
  Rng rng(seed);
  std::vector<int> darts(static_cast<std::size_t>(4 * n));
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::iota(darts.begin(), darts.end(), 0);
    for (std::size_t i = darts.size() - 1; i > 0; --i) {
      std::swap(darts[i], darts[uniform_below(rng, i + 1)]);
    }
    std::vector<std::pair<int, int>> matched;
    for (std::size_t i = 0; i < darts.size(); i += 2) {
      matched.emplace_back(std::min(darts[i], darts[i + 1]), std::max(darts[i], darts[i + 1]));
    }
    std::sort(matched.begin(), matched.end());
    std::vector<std::pair<DartRef, DartRef>> pairs;
    for (auto [a, b] : matched) pairs.push_back({{a / 4, a % 4 + 1}, {b / 4, b % 4 + 1}});
    try {
      return QuadGraph::from_pairs(n, pairs);
    } catch (const InvalidInstance&) {
      // disconnected draw; resample
    }
  }
  throw Error("random_quad_graph: no connected pairing after " + std::to_string(max_attempts) + " attempts");
}

/// Cyclically shifts every dart's role by one (1->2->3->4->1), keeping edge order.
inline QuadGraph rotate_roles(const QuadGraph& g) {
  std::vector<std::pair<DartRef, DartRef>> pairs;
  auto shifted = [](int d) { return DartRef{QuadGraph::vertex_of(d), role_index(QuadGraph::role_of(d)) % 4 + 1}; };
  for (const Edge& e : g.edges()) pairs.push_back({shifted(e.first), shifted(e.second)});
  return QuadGraph::from_pairs(g.vertex_count(), pairs);
}

// ---------------------------------------------------------------------------
// Instance files: {"vertices": n, "edges": [[[v, role], [v', role']], ...]}

inline nlohmann::json to_json(const QuadGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) {
    edges.push_back({{QuadGraph::vertex_of(e.first), role_index(QuadGraph::role_of(e.first))},
                     {QuadGraph::vertex_of(e.second), role_index(QuadGraph::role_of(e.second))}});
  }
  return {{"vertices", g.vertex_count()}, {"edges", edges}};
}

inline std::string serialize(const QuadGraph& g) { return to_json(g).dump(); }

inline QuadGraph graph_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("vertices").get<int>();
    std::vector<std::pair<DartRef, DartRef>> pairs;
    for (const auto& e : doc.at("edges")) {
      if (e.size() != 2 || e[0].size() != 2 || e[1].size() != 2) throw InvalidInstance("edge must be [[v,role],[v,role]]");
      pairs.push_back({{e[0][0].get<int>(), e[0][1].get<int>()}, {e[1][0].get<int>(), e[1][1].get<int>()}});
    }
    return QuadGraph::from_pairs(n, pairs);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInstance(std::string("malformed instance: ") + ex.what());
  }
}

inline QuadGraph load_graph(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidInstance(std::string("malformed instance: ") + ex.what());
  }
  return graph_from_json(doc);
}

/// 64-bit FNV-1a of the serialized instance, printed as 16 hex digits.
inline std::string instance_hash(const QuadGraph& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(g)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xF];
  return out;
}

}  // namespace icehouse
