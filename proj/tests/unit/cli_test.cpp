#include <gtest/gtest.h>

#include <sstream>

#include <porgysim/graph_io.hpp>
#include <porgysim/models.hpp>

#include "app/cli.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace porgysim;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"porgysim"};
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string star_graph(const fixtures::TempDir& dir) {
  auto path = dir / "star.json";
  write_file(path, graph_to_json(oracle::social_graph(4, {{0, 1}, {0, 2}, {0, 3}})).dump());
  return path;
}

}  // namespace

TEST(CliRun, StarMetrics) {
  fixtures::TempDir dir;
  auto r = cli({"run", "--graph", star_graph(dir), "--model", "ic", "--seeds", "n1", "--p", "const:1.0", "--rng", "42",
                "--rounds", "10", "--out", dir / "trace"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = oracle::parse_metrics_csv(read_file(dir / "trace/metrics.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].active, 1u);
  EXPECT_EQ(rows[1].active, 4u);
  for (const char* f : {"events.jsonl", "tree.dot", "session.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "trace" / f)) << f;
  }
  EXPECT_NE(r.out.find("active=4"), std::string::npos);
}

TEST(CliRun, LtWithoutThetaFails) {
  fixtures::TempDir dir;
  auto r = cli({"run", "--graph", star_graph(dir), "--model", "lt", "--seeds", "n1", "--p", "0.5", "--out", dir / "o"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("theta required for LT"), std::string::npos);
  EXPECT_EQ(r.err.rfind("error[config_error]", 0), 0u);
}

TEST(CliRun, ConfigFileAndOverrides) {
  fixtures::TempDir dir;
  write_file(dir / "cfg.json",
             R"({"model": {"type": "lt", "seeds": ["n1"], "max_rounds": 5}, "init": {"p": "const:1", "theta": "const:0.5"},
                 "rng": {"seed": 3}})");
  auto r = cli({"run", "--graph", star_graph(dir), "--config", dir / "cfg.json", "--out", dir / "o"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("model=lt"), std::string::npos);
  EXPECT_NE(r.out.find("active=4"), std::string::npos);
  r = cli({"run", "--graph", star_graph(dir), "--config", dir / "cfg.json", "--theta", "const:1", "--p", "const:0.5",
           "--out", dir / "o2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("active=1 "), std::string::npos);
}

TEST(CliRun, EdgeListInputWarnsOnDuplicates) {
  fixtures::TempDir dir;
  write_file(dir / "g.txt", "a b\nb c\nb a\n");
  auto r = cli({"run", "--graph", dir / "g.txt", "--model", "ic", "--seeds", "a", "--p", "1", "--out", dir / "o"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_NE(r.out.find("active=3"), std::string::npos);
}

TEST(CliUsage, Errors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"run"}).code, 2);
  EXPECT_EQ(cli({"run", "--graph", "g", "--out", "o", "--mode", "sideways"}).code, 2);
  EXPECT_EQ(cli({"generate", "--nodes", "-3"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(CliGenerate, WritesGraph) {
  fixtures::TempDir dir;
  auto r = cli({"generate", "--nodes", "300", "--m", "2", "--seed", "1", "--out", dir / "g.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto g = graph_from_json(parse_json_text(read_file(dir / "g.json")));
  EXPECT_EQ(g.node_count(), 300u);
  EXPECT_EQ(g.edge_count(), 597u);
  write_file(dir / "e.txt", "1 2 0.3 0.7\n");
  r = cli({"generate", "--edge-list", dir / "e.txt"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(graph_from_json(parse_json_text(r.out)).edge_count(), 1u);
}

TEST(CliStepAndMetrics, ContinueSavedSession) {
  fixtures::TempDir dir;
  auto path = dir / "path.json";
  write_file(path, graph_to_json(oracle::social_graph(4, {{0, 1}, {1, 2}, {2, 3}})).dump());
  ASSERT_EQ(cli({"run", "--graph", path, "--model", "ic", "--seeds", "n1", "--p", "1", "--rounds", "1", "--out",
                 dir / "o"}).code,
            0);
  auto session = dir / "o/session.json";
  auto r = cli({"step", "--session", session});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("active=3"), std::string::npos);
  r = cli({"metrics", "--session", session});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rows = oracle::parse_metrics_csv(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows.back().active, 3u);
  r = cli({"metrics", "--session", session, "--format", "dot"});
  EXPECT_EQ(r.out.rfind("digraph derivation", 0), 0u);
  r = cli({"metrics", "--session", session, "--leaf", "999"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown_state"), std::string::npos);
}

TEST(CliCompare, SideBySide) {
  fixtures::TempDir dir;
  write_file(dir / "a.csv", "step,active,visited,efficiency\n1,1,0,\n2,4,3,1.3333333333333333\n");
  write_file(dir / "b.csv", "step,active,visited,efficiency\n1,1,0,\n2,2,3,0.6666666666666666\n3,3,4,0.75\n");
  auto r = cli({"compare", dir / "a.csv", dir / "b.csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2,4,2,"), std::string::npos);
  EXPECT_NE(r.out.find("3,,3,"), std::string::npos);
  write_file(dir / "bad.csv", "step,active,visited,efficiency\n1,x,0,\n");
  EXPECT_EQ(cli({"compare", dir / "a.csv", dir / "bad.csv"}).code, 1);
}

TEST(CliValidate, Files) {
  fixtures::TempDir dir;
  write_file(dir / "ic.strat", ic_strategy_text());
  auto r = cli({"validate", "--strategy", dir / "ic.strat", "--model", "ic", "--graph", star_graph(dir)});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(cli({"validate", "--strategy", dir / "ic.strat", "--model", "lt"}).code, 1);
  write_file(dir / "bad.strat", "repeat(");
  r = cli({"validate", "--strategy", dir / "bad.strat"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error[parse_error]"), std::string::npos);
  EXPECT_EQ(cli({"validate"}).code, 2);
  EXPECT_EQ(cli({"validate", "--graph", dir / "missing.json"}).code, 1);
}
