#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "icehouse/error.hpp"
#include "icehouse/exact.hpp"
#include "icehouse/quadgraph.hpp"
#include "icehouse/rng.hpp"
#include "icehouse/weights.hpp"

// Single-edge-flip Metropolis chain on all 2^|E| edge-bit assignments. A
// vertex with out-degree 2 contributes its pattern weight, any other vertex
// (a defect) contributes the fugacity lambda. Restricted to defect-free
// states the stationary law is the Gibbs law of the six-vertex model.

namespace icehouse {

/// Pins share the enumerator's representation: one optional bit per edge.
using PinSet = EdgePins;

inline PinSet no_pins(const QuadGraph& g) { return PinSet(static_cast<std::size_t>(g.edge_count())); }

inline std::vector<int> free_edges(const PinSet& pins) {
  std::vector<int> out;
  for (std::size_t e = 0; e < pins.size(); ++e) {
    if (!pins[e]) out.push_back(static_cast<int>(e));
  }
  return out;
}

/// Hold probability used by default. Without it, a kernel that accepts every
/// flip (unit weights with lambda = 1) walks the hypercube with period 2, and
/// an even thinning interval then only ever inspects one parity class.
inline constexpr double kDefaultLaziness = 0.1;

struct ChainParams {
  double lambda = 1.0;
  double laziness = kDefaultLaziness;
  std::uint64_t seed = 0;

  /// lambda = max(a, b, c).
  static ChainParams defaults(const Weights& w, std::uint64_t seed) { return {w.max(), kDefaultLaziness, seed}; }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
    if (!(laziness >= 0.0 && laziness < 1.0)) throw InvalidArgument("laziness must lie in [0, 1)");
  }
};

/// Edge bits (read at the first dart) plus cached local out-masks per vertex.
/// Edge consistency is structural; the ice rule may fail at defect vertices.
class WormState {
 public:
  WormState() = default;

  WormState(const QuadGraph& g, std::vector<std::uint8_t> edge_bits) : edge_bits_(std::move(edge_bits)) {
    if (edge_bits_.size() != static_cast<std::size_t>(g.edge_count())) throw InvalidArgument("edge bit vector has wrong length");
    masks_.assign(static_cast<std::size_t>(g.vertex_count()), 0);
    for (int e = 0; e < g.edge_count(); ++e) {
      const Edge& edge = g.edge(e);
      const int out_dart = edge_bits_[static_cast<std::size_t>(e)] ? edge.first : edge.second;
      masks_[static_cast<std::size_t>(QuadGraph::vertex_of(out_dart))] |= static_cast<std::uint8_t>(role_bit(QuadGraph::role_of(out_dart)));
    }
    defect_count_ = 0;
    for (std::uint8_t m : masks_) defect_count_ += std::popcount(m) != 2;
  }

  const std::vector<std::uint8_t>& edge_bits() const { return edge_bits_; }
  const std::vector<std::uint8_t>& local_masks() const { return masks_; }
  int out_degree(int v) const { return std::popcount(masks_[static_cast<std::size_t>(v)]); }
  int defect_count() const { return defect_count_; }
  bool defect_free() const { return defect_count_ == 0; }

  std::vector<int> defect_set() const {
    std::vector<int> out;
    for (std::size_t v = 0; v < masks_.size(); ++v) {
      if (std::popcount(masks_[v]) != 2) out.push_back(static_cast<int>(v));
    }
    return out;
  }

  Orientation orientation(const QuadGraph& g) const { return Orientation::from_edge_bits(g, edge_bits_); }

  /// Recomputes the caches from the edge bits.
  bool consistent(const QuadGraph& g) const {
    const WormState fresh(g, edge_bits_);
    return fresh.masks_ == masks_ && fresh.defect_count_ == defect_count_;
  }

  friend bool operator==(const WormState& x, const WormState& y) { return x.edge_bits_ == y.edge_bits_; }

 private:
  friend class WormChain;

  std::vector<std::uint8_t> edge_bits_;
  std::vector<std::uint8_t> masks_;
  int defect_count_ = 0;
};

namespace detail {

/// Per-local-mask factor: the signature value at out-degree 2, lambda otherwise.
inline std::array<double, 16> vertex_factors(const Weights& w, double lambda) {
  const Signature sig = signature_from_weights(w);
  std::array<double, 16> f{};
  for (int m = 0; m < 16; ++m) f[static_cast<std::size_t>(m)] = std::popcount(static_cast<unsigned>(m)) == 2 ? sig.table[static_cast<std::size_t>(m)] : lambda;
  return f;
}

}  // namespace detail

inline double state_weight(const QuadGraph& g, const Weights& w, const WormState& s, const ChainParams& p) {
  (void)g;
  const auto f = detail::vertex_factors(w, p.lambda);
  double product = 1.0;
  for (std::uint8_t m : s.local_masks()) product *= f[m];
  return product;
}

// ---------------------------------------------------------------------------
// Initial states

/// Orients every edge along a Hierholzer traversal; each closed trail enters
/// and leaves a vertex equally often, so every vertex gets out-degree 2.
inline std::vector<std::uint8_t> eulerian_edge_bits(const QuadGraph& g) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(g.edge_count()), 0);
  std::vector<bool> used(static_cast<std::size_t>(g.edge_count()), false);
  std::vector<int> next_role(static_cast<std::size_t>(g.vertex_count()), 0);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int v = stack.back();
    int& r = next_role[static_cast<std::size_t>(v)];
    while (r < 4 && used[static_cast<std::size_t>(g.edge_of(4 * v + r))]) ++r;
    if (r == 4) {
      stack.pop_back();
      continue;
    }
    const int dart = 4 * v + r;
    const int e = g.edge_of(dart);
    used[static_cast<std::size_t>(e)] = true;
    bits[static_cast<std::size_t>(e)] = g.edge(e).first == dart ? 1 : 0;
    stack.push_back(QuadGraph::vertex_of(g.mate(dart)));
  }
  return bits;
}

/// Sets pinned bits, then restores the ice rule by reversing directed paths of
/// free edges from vertices with out-degree above 2 to vertices below 2.
/// Throws InfeasiblePins when no such path exists for some surplus.
inline std::vector<std::uint8_t> repair_against_pins(const QuadGraph& g, std::vector<std::uint8_t> bits, const PinSet& pins) {
  for (std::size_t e = 0; e < pins.size(); ++e) {
    if (pins[e]) bits[e] = *pins[e];
  }
  const int n = g.vertex_count();
  auto tail = [&](int e) { return QuadGraph::vertex_of(bits[static_cast<std::size_t>(e)] ? g.edge(e).first : g.edge(e).second); };
  std::vector<int> out(static_cast<std::size_t>(n), 0);
  for (int e = 0; e < g.edge_count(); ++e) ++out[static_cast<std::size_t>(tail(e))];
  for (int source = 0; source < n; ++source) {
    while (out[static_cast<std::size_t>(source)] > 2) {
      std::vector<int> via(static_cast<std::size_t>(n), -2);
      via[static_cast<std::size_t>(source)] = -1;
      std::deque<int> queue{source};
      int sink = -1;
      while (!queue.empty() && sink == -1) {
        const int x = queue.front();
        queue.pop_front();
        for (int r = 0; r < 4; ++r) {
          const int d = 4 * x + r;
          const int e = g.edge_of(d);
          if (pins[static_cast<std::size_t>(e)] || g.is_self_loop(e) || tail(e) != x) continue;
          const int y = QuadGraph::vertex_of(g.mate(d));
          if (via[static_cast<std::size_t>(y)] != -2) continue;
          via[static_cast<std::size_t>(y)] = e;
          if (out[static_cast<std::size_t>(y)] < 2) {
            sink = y;
            break;
          }
          queue.push_back(y);
        }
      }
      if (sink == -1) throw InfeasiblePins("no ice-rule orientation agrees with the pinned edges");
      for (int y = sink; y != source;) {
        const int e = via[static_cast<std::size_t>(y)];
        y = tail(e);
        bits[static_cast<std::size_t>(e)] ^= 1U;
      }
      --out[static_cast<std::size_t>(source)];
      ++out[static_cast<std::size_t>(sink)];
    }
  }
  return bits;
}

/// Valid start respecting pins. When a zero weight leaves that orientation at
/// weight zero, free edges at zero-weight vertices are flipped so the start has
/// positive weight (possibly with defects, which burn-in removes).
inline WormState initial_state(const QuadGraph& g, const Weights& w, const PinSet& pins, const ChainParams& p) {
  WormState s(g, repair_against_pins(g, eulerian_edge_bits(g), pins));
  if (state_weight(g, w, s, p) > 0.0) return s;
  const auto f = detail::vertex_factors(w, p.lambda);
  std::vector<std::uint8_t> bits = s.edge_bits();
  for (int v = 0; v < g.vertex_count(); ++v) {
    const WormState cur(g, bits);
    if (f[cur.local_masks()[static_cast<std::size_t>(v)]] > 0.0) continue;
    for (int r = 0; r < 4; ++r) {
      const int e = g.edge_of(4 * v + r);
      if (pins[static_cast<std::size_t>(e)]) continue;
      bits[static_cast<std::size_t>(e)] ^= 1U;
      break;
    }
  }
  return WormState(g, bits);
}

// ---------------------------------------------------------------------------
// The chain

/// Optional mixing trace: one CSV row "step,defects,log_weight" every `every` steps.
struct Diagnostics {
  std::ostream* out = nullptr;
  std::uint64_t every = 1000;
};

class WormChain {
 public:
  WormChain(const QuadGraph& g, const Weights& w, PinSet pins, const ChainParams& p, WormState start)
      : g_(&g), params_(p), pins_(std::move(pins)), state_(std::move(start)), rng_(p.seed) {
    p.validate();
    w.validate();
    factor_ = detail::vertex_factors(w, p.lambda);
    for (std::size_t e = 0; e < pins_.size(); ++e) {
      if (pins_[e] && state_.edge_bits_[e] != *pins_[e]) throw InvalidArgument("start state violates a pin");
    }
    for (int e : free_edges(pins_)) {
      const Edge& edge = g.edge(e);
      moves_.push_back({e, QuadGraph::vertex_of(edge.first), QuadGraph::vertex_of(edge.second),
                        static_cast<std::uint8_t>(role_bit(QuadGraph::role_of(edge.first))),
                        static_cast<std::uint8_t>(role_bit(QuadGraph::role_of(edge.second)))});
    }
  }

  WormChain(const QuadGraph& g, const Weights& w, PinSet pins, const ChainParams& p)
      : WormChain(g, w, pins, p, initial_state(g, w, pins, p)) {}

  const WormState& state() const { return state_; }
  const PinSet& pins() const { return pins_; }
  int free_edge_count() const { return static_cast<int>(moves_.size()); }
  std::uint64_t steps_taken() const { return steps_; }

  /// One kernel application. Returns true when a flip was accepted.
  bool step() {
    if (moves_.empty()) throw InvalidArgument("every edge is pinned; the chain has no moves");
    ++steps_;
    if (params_.laziness > 0.0 && uniform01(rng_) < params_.laziness) return false;
    const Move& mv = moves_[uniform_below(rng_, moves_.size())];
    auto& masks = state_.masks_;
    const std::uint8_t old_u = masks[static_cast<std::size_t>(mv.u)];
    double old_w, new_w;
    std::uint8_t new_u, new_v = 0;
    if (mv.u == mv.v) {
      new_u = old_u ^ mv.mask_u ^ mv.mask_v;
      old_w = factor_[old_u];
      new_w = factor_[new_u];
    } else {
      const std::uint8_t old_v = masks[static_cast<std::size_t>(mv.v)];
      new_u = old_u ^ mv.mask_u;
      new_v = old_v ^ mv.mask_v;
      old_w = factor_[old_u] * factor_[old_v];
      new_w = factor_[new_u] * factor_[new_v];
    }
    bool accept;
    if (old_w == 0.0) accept = new_w > 0.0;
    else if (new_w >= old_w) accept = true;
    else accept = uniform01(rng_) * old_w < new_w;
    if (!accept) return false;

    state_.defect_count_ -= is_defect(old_u);
    if (mv.u != mv.v) state_.defect_count_ -= is_defect(masks[static_cast<std::size_t>(mv.v)]);
    masks[static_cast<std::size_t>(mv.u)] = new_u;
    if (mv.u != mv.v) masks[static_cast<std::size_t>(mv.v)] = new_v;
    state_.defect_count_ += is_defect(new_u);
    if (mv.u != mv.v) state_.defect_count_ += is_defect(new_v);
    state_.edge_bits_[static_cast<std::size_t>(mv.edge)] ^= 1U;
    assert(state_.consistent(*g_));
    return true;
  }

  double log_weight() const {
    double lw = 0.0;
    for (std::uint8_t m : state_.masks_) lw += std::log(factor_[m]);
    return lw;
  }

  /// Runs burn_in steps, then inspects the state every `thin` steps and hands
  /// each defect-free, positive-weight one to `on_sample` until `count` were delivered. With no
  /// free edges the start state is delivered `count` times. Throws
  /// SamplerTimeout once `step_budget` steps were spent.
  template <class OnSample>
  void collect(std::uint64_t burn_in, std::uint64_t thin, std::uint64_t count, std::uint64_t step_budget,
               OnSample&& on_sample, const Diagnostics& diag = {}) {
    if (thin == 0) throw InvalidArgument("thin must be positive");
    if (moves_.empty()) {
      if (!state_.defect_free() || !positive_weight()) throw InfeasiblePins("fully pinned state is not an ice-rule orientation");
      for (std::uint64_t k = 0; k < count; ++k) on_sample(state_);
      return;
    }
    const std::uint64_t start = steps_;
    auto advance = [&](std::uint64_t n) {
      for (std::uint64_t i = 0; i < n; ++i) {
        step();
        if (diag.out != nullptr && steps_ % diag.every == 0) {
          *diag.out << steps_ << ',' << state_.defect_count_ << ',' << log_weight() << '\n';
        }
      }
    };
    advance(burn_in);
    std::uint64_t delivered = 0;
    while (delivered < count) {
      if (steps_ - start + thin > step_budget) {
        throw SamplerTimeout("collected " + std::to_string(delivered) + " of " + std::to_string(count) +
                             " defect-free samples within " + std::to_string(step_budget) + " steps");
      }
      advance(thin);
      if (state_.defect_free() && positive_weight()) {
        on_sample(state_);
        ++delivered;
      }
    }
  }

 private:
  struct Move {
    int edge;
    int u, v;
    std::uint8_t mask_u, mask_v;
  };

  static int is_defect(std::uint8_t m) { return std::popcount(m) != 2; }

  bool positive_weight() const {
    return std::all_of(state_.masks_.begin(), state_.masks_.end(), [&](std::uint8_t m) { return factor_[m] > 0.0; });
  }

  const QuadGraph* g_;
  ChainParams params_;
  PinSet pins_;
  WormState state_;
  Rng rng_;
  std::array<double, 16> factor_{};
  std::vector<Move> moves_;
  std::uint64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Sampling front ends

struct SampleSchedule {
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::uint64_t count = 0;
  std::uint64_t step_budget = 0;  // 0 selects burn_in + 1000 * thin * count + 10^6

  std::uint64_t budget() const { return step_budget != 0 ? step_budget : burn_in + 1000 * thin * count + 1000000; }
};

inline std::vector<Orientation> sample(const QuadGraph& g, const Weights& w, const PinSet& pins, const ChainParams& p,
                                       const SampleSchedule& sched, const Diagnostics& diag = {}) {
  WormChain chain(g, w, pins, p);
  std::vector<Orientation> out;
  out.reserve(sched.count);
  chain.collect(sched.burn_in, sched.thin, sched.count, sched.budget(),
                [&](const WormState& s) { out.push_back(s.orientation(g)); }, diag);
  return out;
}

/// Fraction of defect-free samples whose edge bit equals `bit`.
inline double marginal_estimate(const QuadGraph& g, const Weights& w, const PinSet& pins, int edge, std::uint8_t bit,
                                std::uint64_t n_samples, const ChainParams& p, std::uint64_t burn_in, std::uint64_t thin) {
  if (n_samples == 0) throw InvalidArgument("marginal_estimate needs at least one sample");
  WormChain chain(g, w, pins, p);
  std::uint64_t hits = 0;
  chain.collect(burn_in, thin, n_samples, SampleSchedule{burn_in, thin, n_samples, 0}.budget(),
                [&](const WormState& s) { hits += s.edge_bits()[static_cast<std::size_t>(edge)] == bit; });
  return static_cast<double>(hits) / static_cast<double>(n_samples);
}

// ---------------------------------------------------------------------------
// Exact verification harness

inline constexpr int kMaxTransitionEdges = 16;

/// The step kernel as an explicit matrix over all assignments of the free
/// edges; pinned edges keep their pinned bits. Bit k of a state index is the
/// bit of free_edges[k].
struct TransitionMatrix {
  std::vector<int> free_edges;
  PinSet pins;
  Eigen::SparseMatrix<double, Eigen::RowMajor> P;
  std::vector<double> weights;

  std::size_t state_count() const { return weights.size(); }

  std::vector<std::uint8_t> edge_bits(std::size_t state) const {
    std::vector<std::uint8_t> bits(pins.size(), 0);
    for (std::size_t e = 0; e < pins.size(); ++e) {
      if (pins[e]) bits[e] = *pins[e];
    }
    for (std::size_t k = 0; k < free_edges.size(); ++k) bits[static_cast<std::size_t>(free_edges[k])] = (state >> k) & 1U;
    return bits;
  }
};

inline TransitionMatrix exact_transition_matrix(const QuadGraph& g, const Weights& w, const PinSet& pins, const ChainParams& p) {
  p.validate();
  TransitionMatrix tm;
  tm.pins = pins;
  tm.free_edges = free_edges(pins);
  const int u = static_cast<int>(tm.free_edges.size());
  if (u > kMaxTransitionEdges) {
    throw SizeCapExceeded("transition matrix is limited to " + std::to_string(kMaxTransitionEdges) + " free edges");
  }
  if (u == 0) throw InvalidArgument("every edge is pinned; the chain has no moves");
  const std::size_t n = std::size_t{1} << u;
  tm.weights.resize(n);
  for (std::size_t s = 0; s < n; ++s) tm.weights[s] = state_weight(g, w, WormState(g, tm.edge_bits(s)), p);

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(n * static_cast<std::size_t>(u + 1));
  const double propose = (1.0 - p.laziness) / u;
  for (std::size_t s = 0; s < n; ++s) {
    double leave = 0.0;
    for (int k = 0; k < u; ++k) {
      const std::size_t t = s ^ (std::size_t{1} << k);
      const double from = tm.weights[s], to = tm.weights[t];
      const double accept = from == 0.0 ? (to > 0.0 ? 1.0 : 0.0) : std::min(1.0, to / from);
      const double prob = propose * accept;
      if (prob > 0.0) {
        entries.emplace_back(static_cast<int>(s), static_cast<int>(t), prob);
        leave += prob;
      }
    }
    entries.emplace_back(static_cast<int>(s), static_cast<int>(s), 1.0 - leave);
  }
  tm.P.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  tm.P.setFromTriplets(entries.begin(), entries.end());
  return tm;
}

/// Solves pi P = pi, sum(pi) = 1 by sparse LU with one balance equation
/// replaced by the normalization.
inline std::vector<double> stationary_distribution(const TransitionMatrix& tm) {
  const auto n = static_cast<Eigen::Index>(tm.state_count());
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index row = 0; row < tm.P.outerSize(); ++row) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(tm.P, row); it; ++it) {
      // (P^T - I)[col][row]
      const Eigen::Index r = it.col();
      if (r == 0) continue;
      entries.emplace_back(r, row, it.value() - (r == row ? 1.0 : 0.0));
    }
  }
  for (Eigen::Index c = 0; c < n; ++c) entries.emplace_back(0, c, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error("stationary solve failed: singular balance system");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  const Eigen::VectorXd pi = lu.solve(rhs);
  return {pi.data(), pi.data() + n};
}

/// max over state pairs of |pi(x) P(x,y) - pi(y) P(y,x)|.
inline double detailed_balance_residual(const TransitionMatrix& tm, const std::vector<double>& pi) {
  double worst = 0.0;
  for (Eigen::Index row = 0; row < tm.P.outerSize(); ++row) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(tm.P, row); it; ++it) {
      const double back = tm.P.coeff(it.col(), row);
      worst = std::max(worst, std::abs(pi[static_cast<std::size_t>(row)] * it.value() - pi[static_cast<std::size_t>(it.col())] * back));
    }
  }
  return worst;
}

/// Whether the positive-weight states form one strongly connected class.
inline bool strongly_connected(const TransitionMatrix& tm) {
  const std::size_t n = tm.state_count();
  std::size_t root = n;
  for (std::size_t s = 0; s < n; ++s) {
    if (tm.weights[s] > 0.0) {
      root = s;
      break;
    }
  }
  if (root == n) return false;
  auto reach = [&](bool forward) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{root};
    seen[root] = true;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(tm.P, static_cast<Eigen::Index>(x)); it; ++it) {
        const auto y = static_cast<std::size_t>(it.col());
        // For the reverse pass use P(y, x) > 0, i.e. the edge y -> x.
        if (!forward && tm.P.coeff(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) <= 0.0) continue;
        if (forward && it.value() <= 0.0) continue;
        if (!seen[y]) {
          seen[y] = true;
          stack.push_back(y);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(true), bwd = reach(false);
  for (std::size_t s = 0; s < n; ++s) {
    if (tm.weights[s] > 0.0 && !(fwd[s] && bwd[s])) return false;
  }
  return true;
}

/// Stationary mass on defect-free states, renormalized, keyed like gibbs_distribution.
inline std::vector<std::pair<Orientation, double>> defect_free_restriction(const QuadGraph& g, const TransitionMatrix& tm,
                                                                           const std::vector<double>& pi) {
  std::vector<std::pair<Orientation, double>> out;
  double mass = 0.0;
  for (std::size_t s = 0; s < tm.state_count(); ++s) {
    const WormState ws(g, tm.edge_bits(s));
    if (!ws.defect_free() || pi[s] <= 0.0) continue;
    out.emplace_back(ws.orientation(g), pi[s]);
    mass += pi[s];
  }
  for (auto& entry : out) entry.second /= mass;
  std::sort(out.begin(), out.end());
  return out;
}

/// Total variation distance between a restricted law and the Gibbs law.
inline double total_variation(const std::vector<std::pair<Orientation, double>>& law, const GibbsDistribution& gibbs) {
  double sum = 0.0;
  for (const auto& [o, prob] : law) sum += std::abs(prob - gibbs.probability(o));
  for (const auto& [o, q] : gibbs.entries) {
    auto it = std::lower_bound(law.begin(), law.end(), o, [](const auto& e, const Orientation& key) { return e.first < key; });
    if (it == law.end() || !(it->first == o)) sum += q;
  }
  return 0.5 * sum;
}

}  // namespace icehouse
