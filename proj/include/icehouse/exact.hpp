#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icehouse/error.hpp"
#include "icehouse/quadgraph.hpp"
#include "icehouse/signature_grid.hpp"
#include "icehouse/weights.hpp"

namespace icehouse {

inline constexpr int kMaxEnumerationEdges = 32;
inline constexpr int kMaxHolantGridEdges = 32;
inline constexpr int kMaxTransferRows = 12;

/// Per-edge pin: nullopt for free, otherwise the required bit at the edge's first dart.
using EdgePins = std::vector<std::optional<std::uint8_t>>;

/// Product of pattern weights; zero for an orientation that breaks the ice rule.
inline double orientation_weight(const QuadGraph& g, const Weights& w, const Orientation& o) {
  double product = 1.0;
  for (int v = 0; v < g.vertex_count(); ++v) product *= pattern_weight(w, vertex_pattern(g, o, v));
  return product;
}

namespace detail {

// Depth-first assignment of edge bits with ice-rule pruning. The edge order is
// greedy: always take the unassigned edge touching the most already-assigned darts.
class IceEnumerator {
 public:
  IceEnumerator(const QuadGraph& g, const Weights& w, const EdgePins* pins) : g_(g), pins_(pins) {
    if (g.edge_count() > kMaxEnumerationEdges) {
      throw SizeCapExceeded("exact enumeration is limited to " + std::to_string(kMaxEnumerationEdges) +
                            " edges; instance has " + std::to_string(g.edge_count()));
    }
    if (pins != nullptr && pins->size() != static_cast<std::size_t>(g.edge_count())) {
      throw InvalidArgument("pin vector length differs from edge count");
    }
    const Signature sig = signature_from_weights(w);
    local_weight_ = sig.table;
    build_order();
  }

  template <class Visitor>
  void run(Visitor&& visit) {
    out_.assign(static_cast<std::size_t>(g_.vertex_count()), 0);
    in_.assign(static_cast<std::size_t>(g_.vertex_count()), 0);
    local_.assign(static_cast<std::size_t>(g_.vertex_count()), 0);
    bits_.assign(static_cast<std::size_t>(g_.edge_count()), 0);
    descend(0, 1.0, visit);
  }

 private:
  void build_order() {
    const int n_edges = g_.edge_count();
    std::vector<int> assigned(static_cast<std::size_t>(g_.vertex_count()), 0);
    std::vector<bool> used(static_cast<std::size_t>(n_edges), false);
    order_.clear();
    completes_.assign(static_cast<std::size_t>(n_edges), {});
    for (int step = 0; step < n_edges; ++step) {
      int best = -1, best_score = -1;
      for (int e = 0; e < n_edges; ++e) {
        if (used[static_cast<std::size_t>(e)]) continue;
        const int u = QuadGraph::vertex_of(g_.edge(e).first);
        const int v = QuadGraph::vertex_of(g_.edge(e).second);
        const int score = assigned[static_cast<std::size_t>(u)] + assigned[static_cast<std::size_t>(v)];
        if (score > best_score) {
          best = e;
          best_score = score;
        }
      }
      used[static_cast<std::size_t>(best)] = true;
      order_.push_back(best);
      for (int d : {g_.edge(best).first, g_.edge(best).second}) {
        const int v = QuadGraph::vertex_of(d);
        if (++assigned[static_cast<std::size_t>(v)] == 4) completes_[static_cast<std::size_t>(step)].push_back(v);
      }
    }
  }

  void apply(int dart, int bit, int sign) {
    const auto v = static_cast<std::size_t>(QuadGraph::vertex_of(dart));
    (bit ? out_[v] : in_[v]) += sign;
    if (bit) local_[v] ^= role_bit(QuadGraph::role_of(dart));
  }

  template <class Visitor>
  void descend(int depth, double product, Visitor& visit) {
    if (depth == g_.edge_count()) {
      visit(bits_, product);
      return;
    }
    const int e = order_[static_cast<std::size_t>(depth)];
    const Edge& edge = g_.edge(e);
    for (int bit = 0; bit < 2; ++bit) {
      if (pins_ != nullptr && (*pins_)[static_cast<std::size_t>(e)] && *(*pins_)[static_cast<std::size_t>(e)] != bit) continue;
      apply(edge.first, bit, +1);
      apply(edge.second, bit ^ 1, +1);
      const auto u = static_cast<std::size_t>(QuadGraph::vertex_of(edge.first));
      const auto v = static_cast<std::size_t>(QuadGraph::vertex_of(edge.second));
      if (out_[u] <= 2 && in_[u] <= 2 && out_[v] <= 2 && in_[v] <= 2) {
        double next = product;
        for (int done : completes_[static_cast<std::size_t>(depth)]) next *= local_weight_[static_cast<std::size_t>(local_[static_cast<std::size_t>(done)])];
        if (next != 0.0) {
          bits_[static_cast<std::size_t>(e)] = static_cast<std::uint8_t>(bit);
          descend(depth + 1, next, visit);
          bits_[static_cast<std::size_t>(e)] = 0;
        }
      }
      apply(edge.second, bit ^ 1, -1);
      apply(edge.first, bit, -1);
    }
  }

  const QuadGraph& g_;
  const EdgePins* pins_;
  std::array<double, 16> local_weight_{};
  std::vector<int> order_;
  std::vector<std::vector<int>> completes_;
  std::vector<int> out_, in_, local_;
  std::vector<std::uint8_t> bits_;
};

}  // namespace detail

/// Calls visit(edge_bits, weight) for every ice-rule orientation of positive
/// weight that agrees with `pins` (pass nullptr for none).
template <class Visitor>
void for_each_orientation(const QuadGraph& g, const Weights& w, const EdgePins* pins, Visitor&& visit) {
  detail::IceEnumerator en(g, w, pins);
  en.run(visit);
}

/// Z(G; a, b, c) by pruned enumeration of orientations.
inline double enumerate_Z(const QuadGraph& g, const Weights& w, const EdgePins* pins = nullptr) {
  double z = 0.0;
  for_each_orientation(g, w, pins, [&](const std::vector<std::uint8_t>&, double weight) { z += weight; });
  return z;
}

/// Generic Holant sum over all binary assignments of the grid edges. Branches
/// are cut as soon as a fully assigned node evaluates to zero, which does not
/// change the sum.
inline double holant_eval(const SignatureGrid& grid) {
  if (grid.edge_count > kMaxHolantGridEdges) {
    throw SizeCapExceeded("holant evaluation is limited to " + std::to_string(kMaxHolantGridEdges) + " grid edges");
  }
  const int n_edges = grid.edge_count;
  const int n_nodes = static_cast<int>(grid.nodes.size());
  for (const GridNode& node : grid.nodes) {
    if (node.table.size() != (std::size_t{1} << node.slots.size())) throw InvalidArgument("grid node table size mismatch");
    for (int s : node.slots) {
      if (s < 0 || s >= n_edges) throw InvalidArgument("grid node slot out of range");
    }
  }

  // Assignment order: repeatedly take an edge of the node with fewest open slots.
  std::vector<int> open(static_cast<std::size_t>(n_nodes));
  std::vector<std::vector<int>> nodes_of_edge(static_cast<std::size_t>(n_edges));
  for (int k = 0; k < n_nodes; ++k) {
    const auto& slots = grid.nodes[static_cast<std::size_t>(k)].slots;
    for (int s : slots) nodes_of_edge[static_cast<std::size_t>(s)].push_back(k);
    std::vector<int> distinct(slots);
    std::sort(distinct.begin(), distinct.end());
    open[static_cast<std::size_t>(k)] = static_cast<int>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
  }
  for (auto& list : nodes_of_edge) list.erase(std::unique(list.begin(), list.end()), list.end());
  std::vector<int> order;
  std::vector<bool> placed(static_cast<std::size_t>(n_edges), false);
  std::vector<std::vector<int>> completes(static_cast<std::size_t>(n_edges));
  double constant = 1.0;
  for (int k = 0; k < n_nodes; ++k) {
    if (open[static_cast<std::size_t>(k)] == 0) constant *= grid.nodes[static_cast<std::size_t>(k)].table[0];
  }
  for (int step = 0; step < n_edges; ++step) {
    int pick = -1, pick_open = 1 << 30;
    for (int k = 0; k < n_nodes; ++k) {
      const int o = open[static_cast<std::size_t>(k)];
      if (o == 0 || o >= pick_open) continue;
      for (int s : grid.nodes[static_cast<std::size_t>(k)].slots) {
        if (!placed[static_cast<std::size_t>(s)]) {
          pick = s;
          pick_open = o;
          break;
        }
      }
    }
    if (pick == -1) {
      for (int s = 0; s < n_edges; ++s) {
        if (!placed[static_cast<std::size_t>(s)]) {
          pick = s;
          break;
        }
      }
    }
    placed[static_cast<std::size_t>(pick)] = true;
    order.push_back(pick);
    for (int k : nodes_of_edge[static_cast<std::size_t>(pick)]) {
      if (--open[static_cast<std::size_t>(k)] == 0) completes[static_cast<std::size_t>(step)].push_back(k);
    }
  }

  std::vector<std::uint8_t> value(static_cast<std::size_t>(n_edges), 0);
  auto node_value = [&](int k) {
    const GridNode& node = grid.nodes[static_cast<std::size_t>(k)];
    std::size_t index = 0;
    for (int s : node.slots) index = (index << 1) | value[static_cast<std::size_t>(s)];
    return node.table[index];
  };
  double total = 0.0;
  auto descend = [&](auto&& self, int depth, double product) -> void {
    if (depth == n_edges) {
      total += product;
      return;
    }
    const int s = order[static_cast<std::size_t>(depth)];
    for (std::uint8_t bit = 0; bit < 2; ++bit) {
      value[static_cast<std::size_t>(s)] = bit;
      double next = product;
      for (int k : completes[static_cast<std::size_t>(depth)]) next *= node_value(k);
      if (next != 0.0) self(self, depth + 1, next);
    }
    value[static_cast<std::size_t>(s)] = 0;
  };
  if (constant != 0.0) descend(descend, 0, constant);
  return total;
}

/// Z on torus_grid(rows, cols) as the trace of the cols-th power of the
/// column transfer matrix. A state is the row of left-dart bits entering a
/// column; each entry sums the vertical cycle of the column by a 2x2 product.
inline double transfer_matrix_Z(int rows, int cols, const Weights& w) {
  if (rows < 1 || cols < 1) throw InvalidArgument("torus dimensions must be positive");
  if (rows > kMaxTransferRows) {
    throw SizeCapExceeded("transfer matrix is limited to " + std::to_string(kMaxTransferRows) + " rows");
  }
  const Signature f = signature_from_weights(w);
  const std::size_t dim = std::size_t{1} << rows;
  std::vector<double> t(dim * dim, 0.0);
  auto bit = [](std::size_t s, int i) { return static_cast<int>((s >> i) & 1U); };
  for (std::size_t s = 0; s < dim; ++s) {
    for (std::size_t s_next = 0; s_next < dim; ++s_next) {
      // acc[p][q]: partial product from t_{-1} = p to t_i = q.
      double acc[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
      for (int i = 0; i < rows; ++i) {
        double m[2][2];
        for (int prev = 0; prev < 2; ++prev) {
          for (int cur = 0; cur < 2; ++cur) m[prev][cur] = f(bit(s, i), cur, 1 - bit(s_next, i), 1 - prev);
        }
        double r[2][2];
        for (int p = 0; p < 2; ++p) {
          for (int q = 0; q < 2; ++q) r[p][q] = acc[p][0] * m[0][q] + acc[p][1] * m[1][q];
        }
        std::copy(&r[0][0], &r[0][0] + 4, &acc[0][0]);
      }
      t[s * dim + s_next] = acc[0][0] + acc[1][1];
    }
  }
  std::vector<double> power(t), scratch(dim * dim);
  for (int step = 1; step < cols; ++step) {
    std::fill(scratch.begin(), scratch.end(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t k = 0; k < dim; ++k) {
        const double pik = power[i * dim + k];
        if (pik == 0.0) continue;
        for (std::size_t j = 0; j < dim; ++j) scratch[i * dim + j] += pik * t[k * dim + j];
      }
    }
    power.swap(scratch);
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < dim; ++i) trace += power[i * dim + i];
  return trace;
}

/// Exact Gibbs law over positive-weight ice-rule orientations, sorted by orientation.
struct GibbsDistribution {
  double Z = 0.0;
  std::vector<std::pair<Orientation, double>> entries;

  double probability(const Orientation& o) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), o,
                               [](const auto& entry, const Orientation& key) { return entry.first < key; });
    return (it != entries.end() && it->first == o) ? it->second : 0.0;
  }
};

inline GibbsDistribution gibbs_distribution(const QuadGraph& g, const Weights& w, const EdgePins* pins = nullptr) {
  GibbsDistribution dist;
  for_each_orientation(g, w, pins, [&](const std::vector<std::uint8_t>& bits, double weight) {
    dist.entries.emplace_back(Orientation::from_edge_bits(g, bits), weight);
    dist.Z += weight;
  });
  if (dist.Z == 0.0) throw InfeasiblePins("partition function is zero: no positive-weight orientation");
  for (auto& entry : dist.entries) entry.second /= dist.Z;
  std::sort(dist.entries.begin(), dist.entries.end());
  return dist;
}

/// Pr[edge bit = `bit` | pins] under the Gibbs law, by two enumerations.
inline double exact_marginal(const QuadGraph& g, const Weights& w, const EdgePins& pins, int edge, std::uint8_t bit) {
  const double z = enumerate_Z(g, w, &pins);
  if (z == 0.0) throw InfeasiblePins("no positive-weight orientation agrees with the pins");
  EdgePins extended = pins;
  extended[static_cast<std::size_t>(edge)] = bit;
  return enumerate_Z(g, w, &extended) / z;
}

}  // namespace icehouse
