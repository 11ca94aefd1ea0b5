#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "icehouse/cli.hpp"
#include "oracles.hpp"

using namespace icehouse;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "icehouse");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(ICEHOUSE_DATA_DIR) + "/" + name; }

}  // namespace

TEST(Cli, ExactFourParallel) {
  const Result r = run({"exact", "--instance", data("four_parallel.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("Z").get<double>(), 6.0);
  EXPECT_EQ(doc.at("cross_check").get<std::string>(), "agree");
  EXPECT_EQ(doc.at("oracles").size(), 2U);
}

TEST(Cli, ExactTorusUsesAllOracles) {
  const Result r = run({"exact", "--torus", "2", "2", "--weights", "1", "2", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc.at("Z").get<double>(), 114.0);
  EXPECT_EQ(doc.at("oracles").size(), 3U);
  EXPECT_EQ(doc.at("cross_check").get<std::string>(), "agree");
  const Result csv = run({"exact", "--torus", "1", "1", "--format", "csv"});
  EXPECT_EQ(csv.out, "oracle,value\nenumerate,4\nholant,4\ntransfer_matrix,4\n");
}

TEST(Cli, Classify) {
  const auto doc = nlohmann::json::parse(run({"classify", "--weights", "3", "1", "1"}).out);
  EXPECT_TRUE(doc.at("region").at("F_gt").get<bool>());
  EXPECT_FALSE(doc.at("region").at("F_le").get<bool>());
  EXPECT_EQ(run({"classify", "--weights", "1", "1", "2", "--format", "csv"}).out, "F_le2,F_le,F_eq,F_gt\n0,1,1,0\n");
  EXPECT_EQ(run({"classify", "--weights", "0", "0", "0"}).code, 1);
}

TEST(Cli, RandomizedCommandsNeedSeed) {
  EXPECT_EQ(run({"estimate", "--torus", "1", "1"}).code, 1);
  EXPECT_EQ(run({"sample", "--torus", "1", "1"}).code, 1);
  EXPECT_EQ(run({"gen", "--random", "4"}).code, 1);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"exact"}).code, 1);
  EXPECT_EQ(run({"exact", "--torus", "1", "1", "--instance", data("four_parallel.json")}).code, 1);
  EXPECT_EQ(run({"exact", "--instance", data("dangling.json")}).code, 2);
  EXPECT_EQ(run({"exact", "--instance", data("missing.json")}).code, 2);
  EXPECT_EQ(run({"exact", "--random", "20", "--seed", "1"}).code, 3);
  EXPECT_EQ(run({"exact", "--torus", "1", "1", "--format", "xml"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  // The only orientations of the single-vertex instance are A and B patterns.
  EXPECT_EQ(run({"sample", "--instance", data("single_vertex.json"), "--weights", "0", "0", "1", "--seed", "1"}).code, 2);
}

TEST(Cli, GenRoundTrip) {
  const Result r = run({"gen", "--random", "5", "--seed", "3"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(load_graph(r.out), random_quad_graph(5, 3));
  EXPECT_EQ(run({"gen", "--torus", "2", "3"}).out, serialize(torus_grid(2, 3)) + "\n");
}

TEST(Cli, SampleCsv) {
  const Result r = run({"sample", "--instance", data("four_parallel.json"), "--seed", "2", "--count", "5", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "d0,d1,d2,d3,d4,d5,d6,d7");
  const QuadGraph g = fixtures::four_parallel();
  int rows = 0;
  while (std::getline(in, line)) {
    Orientation o;
    for (std::size_t k = 0; k < line.size(); k += 2) o.dart_bits.push_back(static_cast<std::uint8_t>(line[k] - '0'));
    EXPECT_TRUE(o.is_valid(g)) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 5);
}

TEST(Cli, OutputsAreByteIdentical) {
  const std::vector<std::string> est = {"estimate", "--torus", "1", "2", "--epsilon", "0.3", "--seed", "7"};
  const Result a = run(est), b = run(est);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(nlohmann::json::parse(a.out).contains("wall_clock_seconds"));
  const std::vector<std::string> samp = {"sample", "--torus", "2", "2", "--seed", "7", "--count", "20"};
  EXPECT_EQ(run(samp).out, run(samp).out);
}

TEST(Cli, EstimateWarnsOutsideTractableRegion) {
  const Result r = run({"estimate", "--torus", "1", "2", "--weights", "3", "1", "1", "--epsilon", "0.5", "--seed", "1"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const Result inside = run({"estimate", "--torus", "1", "2", "--epsilon", "0.5", "--seed", "1", "--timing"});
  EXPECT_EQ(inside.err.find("warning"), std::string::npos);
  EXPECT_TRUE(nlohmann::json::parse(inside.out).contains("wall_clock_seconds"));
}

TEST(Cli, TutteCheck) {
  const Result r = run({"tutte-check", "--format", "csv"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("k4,4,6,4,312,156,2\n"), std::string::npos) << r.out;
  const Result file = run({"tutte-check", "--plane", data("triangle_plane.json")});
  ASSERT_EQ(file.code, 0) << file.err;
  EXPECT_NE(file.out.find("\"ratio\": 2.0"), std::string::npos) << file.out;
}
