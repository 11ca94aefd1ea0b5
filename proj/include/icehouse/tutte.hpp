#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icehouse/error.hpp"
#include "icehouse/rng.hpp"

namespace icehouse {

inline constexpr int kMaxTutteEdges = 14;

/// Undirected multigraph; loops and parallel edges allowed.
struct Multigraph {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;
};

/// Integer Tutte polynomial, coeff[i][j] multiplying x^i y^j.
class TuttePolynomial {
 public:
  TuttePolynomial() = default;
  static TuttePolynomial one() {
    TuttePolynomial p;
    p.coeff_ = {{1}};
    return p;
  }

  std::int64_t coefficient(std::size_t i, std::size_t j) const {
    return i < coeff_.size() && j < coeff_[i].size() ? coeff_[i][j] : 0;
  }
  std::size_t x_degree() const { return coeff_.empty() ? 0 : coeff_.size() - 1; }

  /// Horner evaluation in any ring containing the integers.
  template <class T>
  T evaluate(T x, T y) const {
    T total = T(0);
    for (std::size_t i = coeff_.size(); i-- > 0;) {
      T row = T(0);
      for (std::size_t j = coeff_[i].size(); j-- > 0;) row = row * y + T(coeff_[i][j]);
      total = total * x + row;
    }
    return total;
  }

  TuttePolynomial& operator+=(const TuttePolynomial& o) {
    if (coeff_.size() < o.coeff_.size()) coeff_.resize(o.coeff_.size());
    for (std::size_t i = 0; i < o.coeff_.size(); ++i) {
      if (coeff_[i].size() < o.coeff_[i].size()) coeff_[i].resize(o.coeff_[i].size(), 0);
      for (std::size_t j = 0; j < o.coeff_[i].size(); ++j) coeff_[i][j] += o.coeff_[i][j];
    }
    return *this;
  }

  TuttePolynomial times_x() const {
    TuttePolynomial p = *this;
    p.coeff_.insert(p.coeff_.begin(), std::vector<std::int64_t>{});
    return p;
  }

  TuttePolynomial times_y() const {
    TuttePolynomial p = *this;
    for (auto& row : p.coeff_) {
      if (!row.empty()) row.insert(row.begin(), 0);
    }
    return p;
  }

  friend bool operator==(const TuttePolynomial& p, const TuttePolynomial& q) {
    const std::size_t ni = std::max(p.coeff_.size(), q.coeff_.size());
    for (std::size_t i = 0; i < ni; ++i) {
      std::size_t nj = 0;
      if (i < p.coeff_.size()) nj = std::max(nj, p.coeff_[i].size());
      if (i < q.coeff_.size()) nj = std::max(nj, q.coeff_[i].size());
      for (std::size_t j = 0; j < nj; ++j) {
        if (p.coefficient(i, j) != q.coefficient(i, j)) return false;
      }
    }
    return true;
  }

 private:
  std::vector<std::vector<std::int64_t>> coeff_;
};

struct TutteOptions {
  /// When set, each recursion step deletes/contracts a uniformly random edge
  /// instead of the first one.
  std::optional<std::uint64_t> shuffle_seed;
  bool memoize = true;
};

namespace detail {

using EdgeList = std::vector<std::pair<int, int>>;

// Relabels vertices by first appearance in the sorted normalized edge list so
// that equal keys denote the same labeled multigraph. Isolated vertices do not
// affect T and are dropped.
inline EdgeList tutte_key(EdgeList edges) {
  for (auto& [u, v] : edges) {
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  std::map<int, int> label;
  for (auto& [u, v] : edges) {
    u = label.try_emplace(u, static_cast<int>(label.size())).first->second;
    v = label.try_emplace(v, static_cast<int>(label.size())).first->second;
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

inline bool connects_without(const EdgeList& edges, std::size_t skip, int from, int to) {
  std::vector<int> frontier{from}, seen{from};
  while (!frontier.empty()) {
    const int x = frontier.back();
    frontier.pop_back();
    if (x == to) return true;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (k == skip) continue;
      int y;
      if (edges[k].first == x) y = edges[k].second;
      else if (edges[k].second == x) y = edges[k].first;
      else continue;
      if (std::find(seen.begin(), seen.end(), y) == seen.end()) {
        seen.push_back(y);
        frontier.push_back(y);
      }
    }
  }
  return false;
}

class DeletionContraction {
 public:
  explicit DeletionContraction(const TutteOptions& opts) : opts_(opts), rng_(opts.shuffle_seed.value_or(0)) {}

  TuttePolynomial solve(EdgeList edges) {
    if (edges.empty()) return TuttePolynomial::one();
    EdgeList key;
    if (opts_.memoize) {
      key = tutte_key(edges);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    const std::size_t k = opts_.shuffle_seed ? uniform_below(rng_, edges.size()) : 0;
    const auto [u, v] = edges[k];
    EdgeList deleted = edges;
    deleted.erase(deleted.begin() + static_cast<std::ptrdiff_t>(k));
    TuttePolynomial result;
    if (u == v) {
      result = solve(std::move(deleted)).times_y();
    } else {
      EdgeList contracted = deleted;
      for (auto& [a, b] : contracted) {
        if (a == v) a = u;
        if (b == v) b = u;
      }
      if (!connects_without(edges, k, u, v)) {
        result = solve(std::move(contracted)).times_x();
      } else {
        result = solve(std::move(deleted));
        result += solve(std::move(contracted));
      }
    }
    if (opts_.memoize) memo_.emplace(std::move(key), result);
    return result;
  }

 private:
  TutteOptions opts_;
  Rng rng_;
  std::map<EdgeList, TuttePolynomial> memo_;
};

}  // namespace detail

/// T(G; x, y) by deletion-contraction: loops give a factor y, bridges a factor
/// x, other edges split into deletion plus contraction, T(edgeless) = 1.
inline TuttePolynomial tutte_polynomial(const Multigraph& g, const TutteOptions& opts = {}) {
  if (static_cast<int>(g.edges.size()) > kMaxTutteEdges) {
    throw SizeCapExceeded("Tutte evaluation is limited to " + std::to_string(kMaxTutteEdges) + " edges");
  }
  for (auto [u, v] : g.edges) {
    if (u < 0 || v < 0 || u >= g.vertex_count || v >= g.vertex_count) throw InvalidArgument("edge endpoint out of range");
  }
  detail::DeletionContraction dc(opts);
  return dc.solve(g.edges);
}

inline double tutte_eval(const Multigraph& g, double x, double y) { return tutte_polynomial(g).evaluate(x, y); }

/// Exact evaluation at an integer point.
inline std::int64_t tutte_eval_exact(const Multigraph& g, std::int64_t x, std::int64_t y) {
  return tutte_polynomial(g).evaluate<std::int64_t>(x, y);
}

}  // namespace icehouse
