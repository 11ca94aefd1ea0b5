#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icehouse/error.hpp"
#include "icehouse/estimator.hpp"
#include "icehouse/exact.hpp"
#include "icehouse/plane.hpp"
#include "icehouse/quadgraph.hpp"
#include "icehouse/signature_grid.hpp"
#include "icehouse/weights.hpp"
#include "icehouse/worm.hpp"

namespace icehouse::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInvalidInstance = 2, kSizeCap = 3, kSamplerTimeout = 4 };

struct RunConfig {
  std::string command;
  std::optional<std::string> instance;
  std::vector<int> torus;  // empty or {rows, cols}
  std::optional<int> random_n;
  std::vector<std::string> plane_files;
  std::vector<double> weights{1.0, 1.0, 1.0};
  double epsilon = 0.1;
  double confidence = 0.75;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<std::string> out;
  std::string format = "json";
  std::uint64_t count = 100;
  std::optional<std::uint64_t> burn_in;
  std::optional<std::uint64_t> thin;
  std::optional<double> lambda;
  std::optional<std::string> diagnostics;
  bool timing = false;
};

namespace detail {

inline int log_level() {
  const char* env = std::getenv("ICEHOUSE_LOG");
  return env != nullptr ? std::atoi(env) : 0;
}

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInstance("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class UsageError : public Error {
 public:
  using Error::Error;
};

struct LoadedInstance {
  QuadGraph graph;
  std::vector<int> torus;
};

inline LoadedInstance load_instance(const RunConfig& cfg) {
  const int sources = (cfg.instance ? 1 : 0) + (cfg.torus.empty() ? 0 : 1) + (cfg.random_n ? 1 : 0);
  if (sources != 1) throw UsageError("give exactly one of --instance, --torus, --random");
  if (cfg.instance) return {load_graph(read_file(*cfg.instance)), {}};
  if (!cfg.torus.empty()) {
    if (cfg.torus[0] < 1 || cfg.torus[1] < 1) throw UsageError("--torus dimensions must be positive");
    return {torus_grid(cfg.torus[0], cfg.torus[1]), cfg.torus};
  }
  if (!cfg.seed) throw UsageError("--random requires --seed");
  if (*cfg.random_n < 1) throw UsageError("--random needs n >= 1");
  return {random_quad_graph(*cfg.random_n, *cfg.seed), {}};
}

inline Weights weights_of(const RunConfig& cfg) {
  if (cfg.weights.size() != 3) throw UsageError("--weights takes three values");
  Weights w{cfg.weights[0], cfg.weights[1], cfg.weights[2]};
  try {
    w.validate();
  } catch (const InvalidArgument& ex) {
    throw UsageError(ex.what());
  }
  return w;
}

inline std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw UsageError(cfg.command + " is randomized and requires --seed");
  return *cfg.seed;
}

inline bool relative_match(double x, double y) { return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}); }

inline std::string run_gen(const RunConfig& cfg) { return serialize(load_instance(cfg).graph) + "\n"; }

inline std::string run_classify(const RunConfig& cfg) {
  const Weights w = weights_of(cfg);
  const Region r = classify_region(w);
  if (cfg.format == "csv") {
    return "F_le2,F_le,F_eq,F_gt\n" + std::to_string(r.in_F_le2) + "," + std::to_string(r.in_F_le) + "," +
           std::to_string(r.in_F_eq) + "," + std::to_string(r.in_F_gt) + "\n";
  }
  nlohmann::json doc = {{"weights", {w.a, w.b, w.c}}, {"region", region_json(r)}};
  return doc.dump(2) + "\n";
}

inline std::string run_exact(const RunConfig& cfg) {
  const LoadedInstance inst = load_instance(cfg);
  const Weights w = weights_of(cfg);
  const QuadGraph& g = inst.graph;
  std::vector<std::pair<std::string, double>> oracles;
  oracles.emplace_back("enumerate", enumerate_Z(g, w));
  if (2 * g.edge_count() <= kMaxHolantGridEdges) oracles.emplace_back("holant", holant_eval(incidence_grid(g, w)));
  if (!inst.torus.empty() && inst.torus[0] <= kMaxTransferRows) {
    oracles.emplace_back("transfer_matrix", transfer_matrix_Z(inst.torus[0], inst.torus[1], w));
  }
  bool agree = true;
  for (const auto& [name, value] : oracles) agree = agree && relative_match(value, oracles.front().second);
  if (cfg.format == "csv") {
    std::string out = "oracle,value\n";
    for (const auto& [name, value] : oracles) out += name + "," + format_double(value) + "\n";
    return out;
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, value] : oracles) list.push_back({{"name", name}, {"value", value}});
  nlohmann::json doc = {{"instance_hash", instance_hash(g)},
                        {"vertices", g.vertex_count()},
                        {"edges", g.edge_count()},
                        {"weights", {w.a, w.b, w.c}},
                        {"Z", oracles.front().second},
                        {"oracles", list},
                        {"cross_check", agree ? "agree" : "MISMATCH"}};
  return doc.dump(2) + "\n";
}

// Small instances are cheap to enumerate; a zero partition function there is
// reported as an invalid instance instead of letting the chain run to its budget.
inline void require_support(const QuadGraph& g, const Weights& w) {
  if (g.edge_count() <= 16 && enumerate_Z(g, w) == 0.0) throw InfeasiblePins("no orientation has positive weight");
}

inline ChainParams chain_params(const RunConfig& cfg, const Weights& w, std::uint64_t seed) {
  ChainParams p = ChainParams::defaults(w, seed);
  if (cfg.lambda) p.lambda = *cfg.lambda;
  try {
    p.validate();
  } catch (const InvalidArgument& ex) {
    throw UsageError(ex.what());
  }
  return p;
}

inline std::string run_sample(const RunConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  const QuadGraph g = load_instance(cfg).graph;
  const Weights w = weights_of(cfg);
  require_support(g, w);
  const ChainParams p = chain_params(cfg, w, seed);
  const SamplePlan plan = sample_plan(0.5, 0.75, g.edge_count());
  SampleSchedule sched{cfg.burn_in.value_or(plan.burn_in), cfg.thin.value_or(plan.thin), cfg.count, 0};
  if (sched.thin == 0) throw UsageError("--thin must be positive");
  std::unique_ptr<std::ofstream> diag_file;
  Diagnostics diag;
  if (cfg.diagnostics) {
    diag_file = std::make_unique<std::ofstream>(*cfg.diagnostics);
    if (!*diag_file) throw UsageError("cannot write " + *cfg.diagnostics);
    *diag_file << "step,defects,log_weight\n";
    diag.out = diag_file.get();
  }
  const auto samples = sample(g, w, no_pins(g), p, sched, diag);
  if (cfg.format == "csv") {
    std::string out;
    for (int d = 0; d < g.dart_count(); ++d) out += (d ? ",d" : "d") + std::to_string(d);
    out += "\n";
    for (const Orientation& o : samples) {
      for (int d = 0; d < g.dart_count(); ++d) {
        if (d) out += ',';
        out += static_cast<char>('0' + o.dart_bits[static_cast<std::size_t>(d)]);
      }
      out += "\n";
    }
    return out;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const Orientation& o : samples) rows.push_back(o.dart_bits);
  nlohmann::json doc = {{"instance_hash", instance_hash(g)}, {"weights", {w.a, w.b, w.c}}, {"lambda", p.lambda},
                        {"seed", seed}, {"burn_in", sched.burn_in}, {"thin", sched.thin}, {"samples", rows}};
  return doc.dump() + "\n";
}

inline std::string run_estimate(const RunConfig& cfg, std::ostream& err) {
  const std::uint64_t seed = require_seed(cfg);
  const QuadGraph g = load_instance(cfg).graph;
  const Weights w = weights_of(cfg);
  require_support(g, w);
  const ChainParams p = chain_params(cfg, w, seed);
  const Region region = classify_region(w);
  if (!region.in_F_le2) {
    err << "warning: weights lie outside F_le2 (regions: " << describe(region)
        << "); the approximation complexity changes sharply across the phase transition, and no accuracy "
           "guarantee is claimed here\n";
  }
  if (cfg.threads < 1) throw UsageError("--threads must be at least 1");
  EstimateOptions opts;
  opts.threads = cfg.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const Estimate est = [&] {
    try {
      return estimate_Z(g, w, cfg.epsilon, cfg.confidence, p, opts);
    } catch (const InvalidArgument& ex) {
      throw UsageError(ex.what());
    }
  }();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (log_level() >= 1) err << "estimate: " << est.value << " from " << est.samples_used << " samples in " << seconds << " s\n";
  if (cfg.format == "csv") {
    std::string out = "edge,direction,marginal,samples\n";
    for (const auto& s : est.per_edge_log) {
      out += std::to_string(s.edge) + "," + std::to_string(s.direction) + "," + format_double(s.marginal) + "," +
             std::to_string(s.samples) + "\n";
    }
    out += "estimate," + format_double(est.value) + ",,\n";
    return out;
  }
  return report_json(g, w, est, cfg.timing ? std::optional<double>(seconds) : std::nullopt).dump(2) + "\n";
}

inline std::string run_tutte_check(const RunConfig& cfg) {
  std::vector<CrosscheckRow> rows;
  if (cfg.plane_files.empty()) {
    for (const auto& [name, pg] : plane_graph_suite()) rows.push_back(tutte_crosscheck(pg, name));
  } else {
    for (const auto& path : cfg.plane_files) rows.push_back(tutte_crosscheck(load_plane_graph(read_file(path)), path));
  }
  if (cfg.format == "csv") {
    std::string out = "name,vertices,edges,faces,Z_medial_1_1_2,T_3_3,ratio\n";
    for (const auto& r : rows) {
      out += r.name + "," + std::to_string(r.vertices) + "," + std::to_string(r.edges) + "," + std::to_string(r.faces) +
             "," + format_double(r.z) + "," + std::to_string(r.tutte) + "," + format_double(r.ratio) + "\n";
    }
    return out;
  }
  return crosscheck_json(rows).dump(2) + "\n";
}

}  // namespace detail

/// Executes one command. The output document goes to cfg.out when set, else to `out`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.format != "json" && cfg.format != "csv") throw detail::UsageError("--format must be json or csv");
    std::string doc;
    if (cfg.command == "gen") doc = detail::run_gen(cfg);
    else if (cfg.command == "exact") doc = detail::run_exact(cfg);
    else if (cfg.command == "classify") doc = detail::run_classify(cfg);
    else if (cfg.command == "sample") doc = detail::run_sample(cfg);
    else if (cfg.command == "estimate") doc = detail::run_estimate(cfg, err);
    else if (cfg.command == "tutte-check") doc = detail::run_tutte_check(cfg);
    else throw detail::UsageError("unknown command '" + cfg.command + "'");
    if (cfg.out) {
      std::ofstream file(*cfg.out, std::ios::binary);
      if (!file) throw detail::UsageError("cannot write " + *cfg.out);
      file << doc;
    } else {
      out << doc;
    }
    return kOk;
  } catch (const detail::UsageError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  } catch (const InvalidInstance& ex) {
    err << "invalid instance: " << ex.what() << "\n";
    return kInvalidInstance;
  } catch (const InfeasiblePins& ex) {
    err << "invalid instance: " << ex.what() << "\n";
    return kInvalidInstance;
  } catch (const SizeCapExceeded& ex) {
    err << "size cap exceeded: " << ex.what() << "\n";
    return kSizeCap;
  } catch (const SamplerTimeout& ex) {
    err << "sampler timeout: " << ex.what() << "\n";
    return kSamplerTimeout;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  }
}

/// Parses argv (argv[0] is the program name) and runs the selected command.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"icehouse: six-vertex model partition functions, sampling and estimation"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_instance = [&](CLI::App* sub) {
    sub->add_option("--instance", cfg.instance, "instance file");
    sub->add_option("--torus", cfg.torus, "torus rows cols")->expected(2);
    sub->add_option("--random", cfg.random_n, "random connected 4-regular graph on n vertices");
  };
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "json or csv");
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--threads", cfg.threads, "worker threads");
  };
  auto add_weights = [&](CLI::App* sub) { sub->add_option("--weights", cfg.weights, "a b c")->expected(3); };

  auto* gen = app.add_subcommand("gen", "write an instance file");
  add_instance(gen);
  add_common(gen);
  auto* exact = app.add_subcommand("exact", "exact Z with every applicable oracle");
  add_instance(exact);
  add_weights(exact);
  add_common(exact);
  auto* classify = app.add_subcommand("classify", "parameter-region flags of (a, b, c)");
  add_weights(classify);
  add_common(classify);
  auto* samp = app.add_subcommand("sample", "ice-rule orientations from the worm chain");
  add_instance(samp);
  add_weights(samp);
  add_common(samp);
  samp->add_option("--count", cfg.count, "number of samples");
  samp->add_option("--burn-in", cfg.burn_in, "burn-in steps");
  samp->add_option("--thin", cfg.thin, "steps between inspected states");
  samp->add_option("--lambda", cfg.lambda, "defect fugacity");
  samp->add_option("--diagnostics", cfg.diagnostics, "CSV trace path");
  auto* est = app.add_subcommand("estimate", "randomized estimate of Z");
  add_instance(est);
  add_weights(est);
  add_common(est);
  est->add_option("--epsilon", cfg.epsilon, "relative error target");
  est->add_option("--confidence", cfg.confidence, "success probability");
  est->add_option("--lambda", cfg.lambda, "defect fugacity");
  est->add_flag("--timing", cfg.timing, "include wall-clock seconds in the report");
  auto* tutte = app.add_subcommand("tutte-check", "Z(medial; 1,1,2) against T(G; 3,3)");
  tutte->add_option("--plane", cfg.plane_files, "plane graph files (default: built-in suite)");
  add_common(tutte);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  return run(cfg, out, err);
}

}  // namespace icehouse::cli
