#pragma once

#include <cstdint>
#include <vector>

#include "icehouse/quadgraph.hpp"
#include "icehouse/weights.hpp"

namespace icehouse {

/// A node of a signature grid: a constraint function over its slots. `table`
/// has 2^arity entries and is indexed with slot 0 as the most significant bit.
struct GridNode {
  enum class Side : std::uint8_t { edge, vertex, other };

  Side side = Side::other;
  std::vector<int> slots;  // grid edge ids, in variable order
  std::vector<double> table;

  int arity() const { return static_cast<int>(slots.size()); }
};

/// General signature grid: binary variables on `edge_count` grid edges and a
/// product of node functions. Grid edges not attached to two nodes are free
/// variables and are summed over like any other.
struct SignatureGrid {
  int edge_count = 0;
  std::vector<GridNode> nodes;
};

inline std::vector<double> disequality_table() { return {0.0, 1.0, 1.0, 0.0}; }

/// Edge-vertex incidence grid of G. Grid edge d is the incidence between the
/// node of dart d's edge and the node of dart d's vertex, so a grid assignment
/// is exactly a dart-bit vector. Nodes: one Disequality per edge of G (in edge
/// order), then one signature node per vertex with slots in role order 1..4.
inline SignatureGrid incidence_grid(const QuadGraph& g, const Weights& w) {
  const Signature sig = signature_from_weights(w);
  SignatureGrid grid;
  grid.edge_count = g.dart_count();
  grid.nodes.reserve(static_cast<std::size_t>(g.edge_count() + g.vertex_count()));
  for (const Edge& e : g.edges()) {
    grid.nodes.push_back({GridNode::Side::edge, {e.first, e.second}, disequality_table()});
  }
  for (int v = 0; v < g.vertex_count(); ++v) {
    GridNode node{GridNode::Side::vertex, {}, std::vector<double>(sig.table.begin(), sig.table.end())};
    for (Role r : {Role::left, Role::down, Role::right, Role::up}) node.slots.push_back(QuadGraph::dart_id(v, r));
    grid.nodes.push_back(std::move(node));
  }
  return grid;
}

}  // namespace icehouse
