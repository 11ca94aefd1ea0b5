#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "icehouse/error.hpp"
#include "icehouse/quadgraph.hpp"

namespace icehouse {

/// Weights of the three pattern pairs: a for A1/A2, b for B1/B2, c for C1/C2.
struct Weights {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;

  void validate() const {
    for (double x : {a, b, c}) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("weights must be finite and nonnegative");
    }
    if (a == 0.0 && b == 0.0 && c == 0.0) throw InvalidArgument("weights must not all be zero");
  }

  Weights scaled(double lambda) const { return {lambda * a, lambda * b, lambda * c}; }
  double max() const { return std::max({a, b, c}); }

  friend bool operator==(const Weights&, const Weights&) = default;
};

inline double pattern_weight(const Weights& w, PatternClass p) {
  switch (p) {
    case PatternClass::A1:
    case PatternClass::A2: return w.a;
    case PatternClass::B1:
    case PatternClass::B2: return w.b;
    case PatternClass::C1:
    case PatternClass::C2: return w.c;
    default: return 0.0;
  }
}

/// Arity-4 signature indexed by pack_local(x1, x2, x3, x4).
struct Signature {
  std::array<double, 16> table{};

  double operator()(int x1, int x2, int x3, int x4) const { return table[static_cast<std::size_t>(pack_local(x1, x2, x3, x4))]; }

  /// Entry (row, col) of the 4x4 matrix with rows x1x2 and columns x4x3.
  double matrix_entry(int row, int col) const {
    const int x1 = row >> 1, x2 = row & 1;
    const int x4 = col >> 1, x3 = col & 1;
    return (*this)(x1, x2, x3, x4);
  }
};

inline Signature signature_from_weights(const Weights& w) {
  w.validate();
  Signature s;
  for (int x = 0; x < 16; ++x) s.table[static_cast<std::size_t>(x)] = pattern_weight(w, pattern_of_local(x));
  return s;
}

/// Membership in each parameter region. The regions overlap, so all flags are reported.
struct Region {
  bool in_F_le2 = false;
  bool in_F_le = false;
  bool in_F_eq = false;
  bool in_F_gt = false;

  friend bool operator==(const Region&, const Region&) = default;
};

/// Tolerance for the equality c = a + b, scaled by max(1, a + b).
inline constexpr double kEqualityTolerance = 1e-12;

inline Region classify_region(const Weights& w) {
  w.validate();
  const double a = w.a, b = w.b, c = w.c;
  Region r;
  r.in_F_le2 = a * a <= b * b + c * c && b * b <= a * a + c * c && c * c <= a * a + b * b;
  r.in_F_le = a <= b + c && b <= a + c && c <= a + b;
  r.in_F_eq = std::abs(c - (a + b)) <= kEqualityTolerance * std::max(1.0, a + b);
  r.in_F_gt = a > 0 && b > 0 && c > 0 && (a > b + c || b > a + c || c > a + b);
  return r;
}

inline std::string describe(const Region& r) {
  std::string out;
  auto add = [&](bool flag, const char* name) {
    if (!flag) return;
    if (!out.empty()) out += ", ";
    out += name;
  };
  add(r.in_F_le2, "F_le2");
  add(r.in_F_le, "F_le");
  add(r.in_F_eq, "F_eq");
  add(r.in_F_gt, "F_gt");
  return out.empty() ? "none" : out;
}

}  // namespace icehouse
