#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "icehouse/error.hpp"
#include "icehouse/exact.hpp"
#include "icehouse/quadgraph.hpp"
#include "icehouse/weights.hpp"
#include "icehouse/worm.hpp"

// Counting from sampling by self-reducibility. Edges are pinned one at a time
// in ascending id order, each to its more likely direction sigma_i, and
//   Z = W(sigma) / prod_i Pr[sigma_i | sigma_1 .. sigma_{i-1}],
// where W(sigma) is the weight of the fully pinned orientation.

namespace icehouse {

/// Tunables behind sample_plan.
struct PlanConfig {
  double samples_constant = 48.0;  // C in N = C * edges / eps^2
  std::uint64_t burn_in_per_edge_squared = 100;
  std::uint64_t thin_per_edge = 10;
};

struct SamplePlan {
  std::uint64_t samples_per_stage = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  int stages = 0;

  std::uint64_t total_samples() const { return samples_per_stage * static_cast<std::uint64_t>(stages); }
};

/// N = ceil(C * edges / eps^2 * ln(1/(1-confidence)) / ln 4): one factor of
/// ln(1/delta) covers the stage failure probabilities, normalized so the
/// default confidence 3/4 gives exactly C * edges / eps^2.
inline SamplePlan sample_plan(double epsilon, double confidence, int num_edges, const PlanConfig& cfg = {}) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (!(confidence >= 0.75 && confidence < 1.0)) throw InvalidArgument("confidence must lie in [3/4, 1)");
  if (num_edges < 1) throw InvalidArgument("plan needs at least one edge");
  const double confidence_factor = std::log(1.0 / (1.0 - confidence)) / std::log(4.0);
  const double raw = cfg.samples_constant * num_edges / (epsilon * epsilon) * confidence_factor;
  SamplePlan plan;
  plan.samples_per_stage = static_cast<std::uint64_t>(std::ceil(raw * (1.0 - 1e-12)));
  const auto e = static_cast<std::uint64_t>(num_edges);
  plan.burn_in = cfg.burn_in_per_edge_squared * e * e;
  plan.thin = std::max<std::uint64_t>(1, cfg.thin_per_edge * e);
  plan.stages = num_edges;
  return plan;
}

struct StageRecord {
  int edge = 0;
  std::uint8_t direction = 0;
  double marginal = 0.0;
  std::uint64_t samples = 0;
};

struct Estimate {
  double value = 0.0;
  double epsilon = 0.0;
  double confidence = 0.0;
  std::uint64_t samples_used = 0;
  std::vector<StageRecord> per_edge_log;
  double terminal_weight = 0.0;
  std::vector<std::uint8_t> terminal_edge_bits;
  Region region;
};

/// Marginals of one edge under the current pins, as reported by a source.
struct StageMarginals {
  double p0 = 0.0;
  double p1 = 0.0;
  std::uint64_t samples = 0;
};

/// Drives the telescoping product with any marginal source. `source(pins,
/// edge, stage)` returns the two directional marginals of `edge`; `chosen(bit)`
/// is called after each pin so stateful sources can carry a start state.
template <class Source>
Estimate telescoping_estimate(const QuadGraph& g, const Weights& w, double epsilon, double confidence, Source& source) {
  Estimate est;
  est.epsilon = epsilon;
  est.confidence = confidence;
  est.region = classify_region(w);
  PinSet pins = no_pins(g);
  double denominator = 1.0;
  for (int e = 0; e < g.edge_count(); ++e) {
    const StageMarginals m = source(pins, e, e);
    const std::uint8_t bit = m.p1 > m.p0 ? 1 : 0;
    const double p = bit ? m.p1 : m.p0;
    if (!(p > 0.0)) throw InfeasiblePins("stage " + std::to_string(e) + ": neither direction observed");
    pins[static_cast<std::size_t>(e)] = bit;
    source.chosen(bit);
    denominator *= p;
    est.samples_used += m.samples;
    est.per_edge_log.push_back({e, bit, p, m.samples});
  }
  est.terminal_edge_bits.resize(static_cast<std::size_t>(g.edge_count()));
  for (int e = 0; e < g.edge_count(); ++e) est.terminal_edge_bits[static_cast<std::size_t>(e)] = *pins[static_cast<std::size_t>(e)];
  est.terminal_weight = orientation_weight(g, w, Orientation::from_edge_bits(g, est.terminal_edge_bits));
  est.value = est.terminal_weight / denominator;
  return est;
}

/// Exact conditional marginals by enumeration; removes all sampling noise.
class ExactMarginals {
 public:
  ExactMarginals(const QuadGraph& g, const Weights& w) : g_(g), w_(w) {}

  StageMarginals operator()(const PinSet& pins, int edge, int) const {
    const double p0 = exact_marginal(g_, w_, pins, edge, 0);
    return {p0, 1.0 - p0, 0};
  }
  void chosen(std::uint8_t) {}

 private:
  const QuadGraph& g_;
  Weights w_;
};

/// Marginals from worm-chain samples. Each stage starts from a defect-free
/// state of the previous stage that agrees with the new pin, so the start is
/// already distributed close to the new conditional law.
class SampledMarginals {
 public:
  SampledMarginals(const QuadGraph& g, const Weights& w, const ChainParams& p, const SamplePlan& plan, int threads = 1)
      : g_(g), w_(w), params_(p), plan_(plan), threads_(std::max(1, threads)) {
    start_ = initial_state(g, w, no_pins(g), p);
  }

  StageMarginals operator()(const PinSet& pins, int edge, int stage) {
    const auto n_chains = static_cast<std::uint64_t>(threads_);
    const std::uint64_t total = plan_.samples_per_stage;
    std::vector<Worker> workers(n_chains);
    auto run = [&](std::uint64_t k) {
      Worker& wk = workers[k];
      const std::uint64_t quota = total / n_chains + (k < total % n_chains ? 1 : 0);
      if (quota == 0) return;
      ChainParams cp = params_;
      cp.seed = mix_seed(params_.seed, static_cast<std::uint64_t>(stage) * n_chains + k);
      try {
        WormChain chain(g_, w_, pins, cp, start_);
        const SampleSchedule sched{plan_.burn_in, plan_.thin, quota, 0};
        chain.collect(sched.burn_in, sched.thin, quota, sched.budget(), [&](const WormState& s) {
          const std::uint8_t bit = s.edge_bits()[static_cast<std::size_t>(edge)];
          ++wk.hits[bit];
          wk.last[bit] = s;
        });
      } catch (...) {
        wk.error = std::current_exception();
      }
    };
    if (n_chains == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      for (std::uint64_t k = 0; k < n_chains; ++k) pool.emplace_back(run, k);
      for (auto& t : pool) t.join();
    }
    std::uint64_t hits[2] = {0, 0};
    for (auto& wk : workers) {
      if (wk.error) std::rethrow_exception(wk.error);
      hits[0] += wk.hits[0];
      hits[1] += wk.hits[1];
      for (int b = 0; b < 2; ++b) {
        if (wk.last[b]) last_[b] = wk.last[b];
      }
    }
    const double n = static_cast<double>(hits[0] + hits[1]);
    return {static_cast<double>(hits[0]) / n, static_cast<double>(hits[1]) / n, hits[0] + hits[1]};
  }

  void chosen(std::uint8_t bit) {
    if (last_[bit]) start_ = *last_[bit];
    last_[0].reset();
    last_[1].reset();
  }

 private:
  struct Worker {
    std::uint64_t hits[2] = {0, 0};
    std::optional<WormState> last[2];
    std::exception_ptr error;
  };

  const QuadGraph& g_;
  Weights w_;
  ChainParams params_;
  SamplePlan plan_;
  int threads_;
  WormState start_;
  std::optional<WormState> last_[2];
};

struct EstimateOptions {
  PlanConfig plan;
  int threads = 1;
};

/// Randomized estimate of Z. Accuracy is only meaningful in F_le2; outside it
/// the estimate still runs and `region` records the verdict.
inline Estimate estimate_Z(const QuadGraph& g, const Weights& w, double epsilon, double confidence, const ChainParams& p,
                           const EstimateOptions& opts = {}) {
  w.validate();
  p.validate();
  const SamplePlan plan = sample_plan(epsilon, confidence, g.edge_count(), opts.plan);
  SampledMarginals source(g, w, p, plan, opts.threads);
  return telescoping_estimate(g, w, epsilon, confidence, source);
}

/// Same pipeline with exact marginals: returns Z up to rounding.
inline Estimate estimate_Z_exact_marginals(const QuadGraph& g, const Weights& w) {
  ExactMarginals source(g, w);
  return telescoping_estimate(g, w, 0.5, 0.75, source);
}

inline nlohmann::json region_json(const Region& r) {
  return {{"F_le2", r.in_F_le2}, {"F_le", r.in_F_le}, {"F_eq", r.in_F_eq}, {"F_gt", r.in_F_gt}};
}

/// Run report. Wall-clock time is included only when given, so reports stay
/// byte-identical across runs by default.
inline nlohmann::json report_json(const QuadGraph& g, const Weights& w, const Estimate& est,
                                  std::optional<double> wall_clock_seconds = std::nullopt) {
  nlohmann::json stages = nlohmann::json::array();
  for (const StageRecord& s : est.per_edge_log) {
    stages.push_back({{"edge", s.edge}, {"direction", s.direction}, {"marginal", s.marginal}, {"samples", s.samples}});
  }
  nlohmann::json doc = {{"instance_hash", instance_hash(g)},
                        {"vertices", g.vertex_count()},
                        {"edges", g.edge_count()},
                        {"weights", {w.a, w.b, w.c}},
                        {"region", region_json(est.region)},
                        {"epsilon", est.epsilon},
                        {"confidence", est.confidence},
                        {"samples_used", est.samples_used},
                        {"stages", stages},
                        {"terminal_weight", est.terminal_weight},
                        {"estimate", est.value}};
  if (wall_clock_seconds) doc["wall_clock_seconds"] = *wall_clock_seconds;
  return doc;
}

}  // namespace icehouse
