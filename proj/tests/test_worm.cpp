#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "icehouse/exact.hpp"
#include "icehouse/worm.hpp"
#include "oracles.hpp"

using namespace icehouse;

namespace {

std::vector<std::uint8_t> complement(std::vector<std::uint8_t> bits) {
  for (auto& b : bits) b ^= 1U;
  return bits;
}

double restricted_tv(const QuadGraph& g, const Weights& w, const ChainParams& p, const PinSet& pins) {
  const TransitionMatrix tm = exact_transition_matrix(g, w, pins, p);
  const auto pi = stationary_distribution(tm);
  return total_variation(defect_free_restriction(g, tm, pi), gibbs_distribution(g, w, &pins));
}

}  // namespace

TEST(StateWeight, DefectFreeUnitWeights) {
  const QuadGraph g = torus_grid(2, 2);
  const WormState s(g, eulerian_edge_bits(g));
  ASSERT_TRUE(s.defect_free());
  EXPECT_EQ(state_weight(g, {1, 1, 1}, s, {0.3, 0.0, 1}), 1.0);
}

TEST(StateWeight, OneFlipMakesTwoDefects) {
  const QuadGraph g = fixtures::four_parallel();
  auto bits = eulerian_edge_bits(g);
  ASSERT_TRUE(WormState(g, bits).defect_free());
  bits[0] ^= 1U;
  const WormState s(g, bits);
  EXPECT_EQ(s.defect_count(), 2);
  EXPECT_EQ(s.defect_set(), (std::vector<int>{0, 1}));
  EXPECT_NE(s.out_degree(0), 2);
  EXPECT_DOUBLE_EQ(state_weight(g, {1, 1, 1}, s, {0.7, 0.0, 1}), 0.49);
}

TEST(StateWeight, DefectFreeMatchesGibbsNumerator) {
  const QuadGraph g = torus_grid(2, 2);
  const Weights w{1.0, 2.0, 2.0};
  const GibbsDistribution d = gibbs_distribution(g, w);
  for (const auto& [o, p] : d.entries) {
    const WormState s(g, o.edge_bits(g));
    EXPECT_NEAR(state_weight(g, w, s, {5.0, 0.0, 0}) / d.Z, p, 1e-15);
  }
}

TEST(InitialState, EulerianIsValidOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const QuadGraph g = random_quad_graph(1 + static_cast<int>(seed % 12), seed);
    EXPECT_TRUE(Orientation::from_edge_bits(g, eulerian_edge_bits(g)).is_valid(g));
  }
}

TEST(InitialState, RepairRespectsPins) {
  const QuadGraph g = torus_grid(3, 3);
  Rng rng(8);
  const GibbsDistribution d = gibbs_distribution(g, {1, 1, 1});
  for (int t = 0; t < 30; ++t) {
    // Pins copied from a random valid orientation are always feasible.
    const auto target = d.entries[uniform_below(rng, d.entries.size())].first.edge_bits(g);
    PinSet pins = no_pins(g);
    for (int e = 0; e < g.edge_count(); ++e) {
      if (uniform01(rng) < 0.5) pins[static_cast<std::size_t>(e)] = target[static_cast<std::size_t>(e)];
    }
    const auto bits = repair_against_pins(g, eulerian_edge_bits(g), pins);
    EXPECT_TRUE(Orientation::from_edge_bits(g, bits).is_valid(g));
    for (int e = 0; e < g.edge_count(); ++e) {
      if (pins[static_cast<std::size_t>(e)]) {
        EXPECT_EQ(bits[static_cast<std::size_t>(e)], *pins[static_cast<std::size_t>(e)]);
      }
    }
  }
}

TEST(InitialState, InfeasiblePinsDetected) {
  const QuadGraph g = fixtures::four_parallel();
  PinSet pins = no_pins(g);
  pins[0] = pins[1] = pins[2] = 1;  // out-degree 3 at vertex 0
  EXPECT_THROW(repair_against_pins(g, eulerian_edge_bits(g), pins), InfeasiblePins);
}

TEST(Step, LazinessAndNoMoves) {
  const QuadGraph g = fixtures::single_vertex();
  const Weights w{1, 1, 1};
  const auto tm = exact_transition_matrix(g, w, no_pins(g), {1.0, 0.5, 0});
  for (Eigen::Index s = 0; s < tm.P.rows(); ++s) EXPECT_GE(tm.P.coeff(s, s), 0.5);

  PinSet all = no_pins(g);
  all[0] = 0;
  all[1] = 0;
  WormChain chain(g, w, all, {1.0, 0.0, 0});
  EXPECT_THROW(chain.step(), InvalidArgument);
  EXPECT_THROW(exact_transition_matrix(g, w, all, {1.0, 0.0, 0}), InvalidArgument);
}

TEST(Step, CachesStayConsistent) {
  const QuadGraph g = random_quad_graph(6, 2);
  WormChain chain(g, {1.0, 0.6, 1.3}, no_pins(g), {0.8, 0.1, 17});
  for (int i = 0; i < 20000; ++i) {
    chain.step();
    if (i % 97 == 0) {
      ASSERT_TRUE(chain.state().consistent(g));
    }
  }
}

TEST(TransitionMatrix, StochasticAndSymmetricProposal) {
  const QuadGraph g = fixtures::four_parallel();
  const auto tm = exact_transition_matrix(g, {1, 1, 1}, no_pins(g), {1.0, 0.0, 0});
  for (Eigen::Index s = 0; s < tm.P.rows(); ++s) {
    double row = 0.0;
    for (Eigen::Index t = 0; t < tm.P.cols(); ++t) row += tm.P.coeff(s, t);
    EXPECT_NEAR(row, 1.0, 1e-12);
    // All weights equal: every single flip is proposed and accepted with 1/4.
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(tm.P.coeff(s, s ^ (1 << k)), 0.25);
  }
}

TEST(TransitionMatrix, DetailedBalanceOnSelfLoopGraph) {
  const QuadGraph g = fixtures::single_vertex();
  for (const Weights& w : {Weights{1, 1, 1}, Weights{1, 2, 3}, Weights{3, 1, 1}}) {
    const auto tm = exact_transition_matrix(g, w, no_pins(g), {w.max(), 0.0, 0});
    const auto pi = stationary_distribution(tm);
    EXPECT_LE(detailed_balance_residual(tm, pi), 1e-12);
    EXPECT_TRUE(strongly_connected(tm));
  }
}

TEST(TransitionMatrix, StationaryRestrictionIsGibbs) {
  struct Case {
    QuadGraph g;
    Weights w;
    double lambda;
  };
  const std::vector<Case> cases = {
      {fixtures::four_parallel(), {1, 1, 1}, 1.0},
      {torus_grid(2, 2), {1, 2, 2}, 2.0},    // F_le2
      {torus_grid(1, 3), {1, 1, 2}, 0.5},    // F_eq
      {random_quad_graph(5, 4), {3, 1, 1}, 3.0},  // F_gt
      {torus_grid(2, 3), {1.2, 0.8, 1.0}, 0.3},
  };
  for (const auto& c : cases) {
    const auto tm = exact_transition_matrix(c.g, c.w, no_pins(c.g), {c.lambda, 0.0, 0});
    const auto pi = stationary_distribution(tm);
    EXPECT_LE(detailed_balance_residual(tm, pi), 1e-12);
    EXPECT_TRUE(strongly_connected(tm));
    EXPECT_LE(total_variation(defect_free_restriction(c.g, tm, pi), gibbs_distribution(c.g, c.w)), 1e-9);
    // Reversal equivariance: complementary states carry equal mass.
    for (std::size_t s = 0; s < tm.state_count(); ++s) {
      const std::size_t t = (tm.state_count() - 1) ^ s;
      EXPECT_NEAR(pi[s], pi[t], 1e-12);
    }
  }
}

TEST(TransitionMatrix, PinnedRestrictionIsConditionalGibbs) {
  const QuadGraph g = torus_grid(2, 2);
  PinSet pins = no_pins(g);
  pins[0] = 1;
  pins[3] = 0;
  EXPECT_LE(restricted_tv(g, {1.0, 2.0, 2.0}, {2.0, 0.25, 0}, pins), 1e-9);
}

TEST(TransitionMatrix, SizeCap) {
  const QuadGraph g = random_quad_graph(9, 0);
  EXPECT_THROW(exact_transition_matrix(g, {1, 1, 1}, no_pins(g), {1.0, 0.0, 0}), SizeCapExceeded);
}

TEST(Sample, UniformOnFourParallel) {
  const QuadGraph g = fixtures::four_parallel();
  const auto samples = sample(g, {1, 1, 1}, no_pins(g), {1.0, 0.1, 2024}, {1000, 4, 1000000, 0});
  ASSERT_EQ(samples.size(), 1000000U);
  std::map<Orientation, double> freq;
  for (const auto& o : samples) {
    ASSERT_TRUE(o.is_valid(g));
    freq[o] += 1.0 / static_cast<double>(samples.size());
  }
  EXPECT_EQ(freq.size(), 6U);
  double tv = 0.0;
  for (const auto& [o, f] : freq) tv += 0.5 * std::abs(f - 1.0 / 6.0);
  EXPECT_LE(tv, 0.01);
}

TEST(Sample, AllPinnedRepeatsOrientation) {
  const QuadGraph g = torus_grid(2, 2);
  const auto bits = eulerian_edge_bits(g);
  PinSet pins = no_pins(g);
  for (int e = 0; e < g.edge_count(); ++e) pins[static_cast<std::size_t>(e)] = bits[static_cast<std::size_t>(e)];
  const auto samples = sample(g, {1, 1, 1}, pins, {1.0, 0.1, 3}, {10, 5, 25, 0});
  ASSERT_EQ(samples.size(), 25U);
  for (const auto& o : samples) EXPECT_EQ(o, Orientation::from_edge_bits(g, bits));
}

TEST(Sample, MarginalsWithinThreeStandardErrors) {
  const QuadGraph g = torus_grid(2, 2);
  const Weights w{1, 2, 2};
  const GibbsDistribution d = gibbs_distribution(g, w);
  const std::size_t n = 200000;
  const auto samples = sample(g, w, no_pins(g), ChainParams::defaults(w, 77), {2000, 40, n, 0});
  for (int e = 0; e < g.edge_count(); ++e) {
    double exact = 0.0, observed = 0.0;
    for (const auto& [o, p] : d.entries) exact += p * o.dart_bits[static_cast<std::size_t>(g.edge(e).first)];
    for (const auto& o : samples) observed += o.dart_bits[static_cast<std::size_t>(g.edge(e).first)];
    observed /= static_cast<double>(n);
    EXPECT_LE(std::abs(observed - exact), 3 * std::sqrt(exact * (1 - exact) / static_cast<double>(n))) << "edge " << e;
  }
}

TEST(Sample, SeedDeterminism) {
  const QuadGraph g = random_quad_graph(5, 9);
  const Weights w{1.0, 0.5, 1.5};
  const SampleSchedule sched{500, 20, 200, 0};
  EXPECT_EQ(sample(g, w, no_pins(g), {1.5, 0.0, 4}, sched), sample(g, w, no_pins(g), {1.5, 0.0, 4}, sched));
  EXPECT_NE(sample(g, w, no_pins(g), {1.5, 0.0, 4}, sched), sample(g, w, no_pins(g), {1.5, 0.0, 5}, sched));
}

TEST(Sample, TimeoutWhenNoPositiveOrientation) {
  const QuadGraph g = fixtures::single_vertex();
  EXPECT_THROW(sample(g, {0, 0, 1}, no_pins(g), {1.0, 0.0, 1}, {10, 2, 5, 1000}), SamplerTimeout);
}

TEST(Sample, DiagnosticsStream) {
  const QuadGraph g = torus_grid(2, 2);
  std::ostringstream csv;
  sample(g, {1, 1, 1}, no_pins(g), {1.0, 0.0, 1}, {0, 10, 50, 0}, {&csv, 100});
  std::istringstream in(csv.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2);
  }
  EXPECT_GE(rows, 5);
}

TEST(MarginalEstimate, SymmetricEdgeNearHalf) {
  // On the torus with a = b = c, reversing all arrows is a symmetry.
  const QuadGraph g = torus_grid(2, 2);
  const double p = marginal_estimate(g, {1, 1, 1}, no_pins(g), 0, 1, 50000, {1.0, 0.1, 12}, 500, 40);
  EXPECT_NEAR(p, 0.5, 3 * std::sqrt(0.25 / 50000));
}

TEST(MarginalEstimate, PinnedCompleteIsDegenerate) {
  const QuadGraph g = torus_grid(2, 2);
  const auto bits = eulerian_edge_bits(g);
  PinSet pins = no_pins(g);
  for (int e = 0; e < g.edge_count(); ++e) pins[static_cast<std::size_t>(e)] = bits[static_cast<std::size_t>(e)];
  EXPECT_EQ(marginal_estimate(g, {1, 1, 1}, pins, 2, bits[2], 100, {1.0, 0.0, 1}, 0, 1), 1.0);
  EXPECT_EQ(marginal_estimate(g, {1, 1, 1}, pins, 2, bits[2] ^ 1U, 100, {1.0, 0.0, 1}, 0, 1), 0.0);
}

TEST(MarginalEstimate, MatchesExactMarginal) {
  const QuadGraph g = random_quad_graph(4, 21);
  const Weights w{1.5, 1.0, 0.8};
  PinSet pins = no_pins(g);
  const std::uint64_t n = 40000;
  for (int e = 0; e < g.edge_count(); ++e) {
    const double exact = exact_marginal(g, w, pins, e, 1);
    const double est = marginal_estimate(g, w, pins, e, 1, n, ChainParams::defaults(w, 300 + static_cast<std::uint64_t>(e)), 500, 40);
    EXPECT_LE(std::abs(est - exact), 3 * std::sqrt(exact * (1 - exact) / static_cast<double>(n)) + 1e-12) << "edge " << e;
  }
}

TEST(WormState, ComplementHelper) {
  const QuadGraph g = torus_grid(1, 2);
  const auto bits = eulerian_edge_bits(g);
  EXPECT_EQ(WormState(g, complement(bits)).orientation(g), WormState(g, bits).orientation(g).reversed());
}

TEST(MarginalEstimate, LoneSelfLoopWithEvenThinning) {
  // All edges but one self-loop pinned: every flip is accepted at unit weights,
  // so without laziness an even thinning interval would see only one direction.
  const QuadGraph g = torus_grid(1, 3);
  ASSERT_TRUE(g.is_self_loop(5));
  const auto bits = eulerian_edge_bits(g);
  PinSet pins = no_pins(g);
  for (int e = 0; e < 5; ++e) pins[static_cast<std::size_t>(e)] = bits[static_cast<std::size_t>(e)];
  const std::uint64_t n = 20000;
  const double p = marginal_estimate(g, {1, 1, 1}, pins, 5, 0, n, ChainParams::defaults({1, 1, 1}, 4), 100, 60);
  EXPECT_NEAR(p, exact_marginal(g, {1, 1, 1}, pins, 5, 0), 4 * std::sqrt(0.25 / static_cast<double>(n)));
}
