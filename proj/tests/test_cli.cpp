#include <gtest/gtest.h>

#include "support.hpp"

namespace cl = crashloc;
namespace fs = std::filesystem;
using cl::testing::quote;
using cl::testing::run_command;
using cl::testing::slurp;

namespace {

const std::string kCli = CRASHLOC_CLI_PATH;
const fs::path kData = CRASHLOC_DATA_DIR;

cl::testing::RunResult cli(const std::string& args) {
  return run_command(quote(kCli) + " " + args + " 2>/dev/null");
}

std::string sample(const char* file) { return quote((kData / "sample" / file).string()); }
std::string tune(const char* file) { return quote((kData / "tune_depth" / file).string()); }

std::vector<std::vector<std::string>> tsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    for (auto f : cl::detail::split(line, '\t')) row.emplace_back(f);
    rows.push_back(row);
  }
  return rows;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = cl::testing::scratch_dir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return quote((dir_ / name).string()); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ExpandSampleAtDepthOne) {
  const auto r = cli("expand -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") +
                     " --depth 1 --depth-maps " + path("maps.jsonl"));
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("\"f13\""), std::string::npos);
  EXPECT_NE(slurp(dir_ / "maps.jsonl").find("\"f13\":1"), std::string::npos);
}

TEST_F(CliTest, ExpandDepthZeroKeepsFrames) {
  const auto r = cli("expand -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " --depth 0");
  ASSERT_EQ(r.status, 0);
  cl::EntityTable t;
  std::istringstream in(r.out);
  const auto traces = cl::read_traces(in, t, "out");
  ASSERT_EQ(traces.size(), 1u);
  std::set<std::string> names;
  for (auto id : traces[0].hits) names.insert(t.name(id));
  EXPECT_EQ(names, (std::set<std::string>{"f1", "f3", "f11", "f12"}));
}

TEST_F(CliTest, ExpandedTracesFeedLocalize) {
  ASSERT_EQ(cli("expand -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -d 1 -o " +
                path("t.jsonl") + " --depth-maps " + path("m.jsonl"))
                .status,
            0);
  const auto via_file = cli("localize --traces " + path("t.jsonl") + " --depth-maps " + path("m.jsonl") +
                            " -p " + sample("passing.jsonl") + " -d 1");
  const auto direct = cli("localize -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -p " +
                          sample("passing.jsonl") + " -d 1");
  ASSERT_EQ(via_file.status, 0);
  ASSERT_EQ(direct.status, 0);
  EXPECT_EQ(via_file.out, direct.out);
}

TEST_F(CliTest, LocalizeReportIsARankPermutation) {
  const auto r = cli("localize -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -p " +
                     sample("passing.jsonl"));
  ASSERT_EQ(r.status, 0);
  const auto rows = tsv(r.out);
  ASSERT_GT(rows.size(), 1u);
  EXPECT_EQ(rows[0][0], "rank");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][0], std::to_string(i));
}

TEST_F(CliTest, HeuristicsOffGivesBaseOrder) {
  const auto r = cli("localize -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -p " +
                     sample("passing.jsonl") + " --h1 off --h2 off --metric tarantula");
  ASSERT_EQ(r.status, 0);
  const auto rows = tsv(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i][2], rows[i][3]);  // final equals base
    if (i > 1) {
      EXPECT_GE(std::stod(rows[i - 1][2]), std::stod(rows[i][2]));
    }
  }
}

TEST_F(CliTest, EnvironmentSuppliesDefaultsAndFlagsWin) {
  const std::string base = "localize -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -p " +
                           sample("passing.jsonl");
  const auto flag = cli(base + " --depth 0");
  const auto env = run_command("CRASHLOC_DEPTH=0 " + quote(kCli) + " " + base + " 2>/dev/null");
  const auto both = run_command("CRASHLOC_DEPTH=0 " + quote(kCli) + " " + base + " --depth 1 2>/dev/null");
  const auto one = cli(base + " --depth 1");
  EXPECT_EQ(flag.out, env.out);
  EXPECT_EQ(both.out, one.out);
  EXPECT_NE(flag.out, one.out);
}

TEST_F(CliTest, EvaluateSingleReportAtRankOne) {
  // A one-entity list whose only entity is the fix: located at 1%.
  const std::string report = std::string(cl::kReportHeader) + "\n1\tf13\t0.5\t0.5\t0.5\t1\t0\n";
  std::ofstream(dir_ / "r.tsv") << report;
  std::ofstream(dir_ / "gt.json") << "{\"fault_1\": [\"f13\"]}";
  const auto r = cli("evaluate -t " + path("gt.json") + " -r " + path("r.tsv") + " --curve");
  ASSERT_EQ(r.status, 0);
  const auto rows = tsv(r.out);
  EXPECT_EQ(rows[1][0], "1.000000");
  EXPECT_EQ(rows[1][1], "100.000000");
}

TEST_F(CliTest, EvaluateGridHasSummaryRows) {
  ASSERT_EQ(cli("localize -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -p " +
                sample("passing.jsonl") + " -d 1 -o " + path("r.tsv"))
                .status,
            0);
  const auto r = cli("evaluate -t " + sample("ground_truth.json") + " -r " + path("r.tsv"));
  ASSERT_EQ(r.status, 0);
  const auto rows = tsv(r.out);
  std::vector<std::string> labels;
  for (std::size_t i = 1; i < rows.size(); ++i) labels.push_back(rows[i][0]);
  EXPECT_EQ(labels, (std::vector<std::string>{"1", "3", "5", "10", "25", "50", "75", "90"}));
}

TEST_F(CliTest, LocalizeByFaultThenEvaluateMatchesLibrary) {
  cl::SynthConfig c;
  c.n_entities = 300;
  c.n_faults = 4;
  c.n_passing_traces = 50;
  c.seed = 3;
  const auto b = cl::generate(c);
  cl::write_benchmark(b, dir_ / "bench");
  const cl::BenchmarkPaths p(dir_ / "bench");
  ASSERT_EQ(cli("localize -g " + quote(p.graph.string()) + " -s " + quote(p.stacks.string()) + " -p " +
                quote(p.passing.string()) + " --truth " + quote(p.ground_truth.string()) + " --by-fault " +
                path("reports"))
                .status,
            0);
  const auto r = cli("evaluate -t " + quote(p.ground_truth.string()) + " --reports-dir " + path("reports") +
                     " --avg-cost");
  ASSERT_EQ(r.status, 0);

  const auto outcomes = cl::evaluate_faults(b.graph, b.table, cl::group_by_fault(b.stacks, b.truth),
                                            b.passing, {});
  const auto rows = tsv(r.out);
  EXPECT_NEAR(std::stod(rows[1][0]), cl::average_cost(outcomes).value, 2e-6);
}

TEST_F(CliTest, TuneDepthPicksThree) {
  const auto r = cli("tune-depth -g " + tune("callgraph.tsv") + " -s " + tune("stacks.jsonl") + " -p " +
                     tune("passing.jsonl") + " -t " + tune("ground_truth.json") + " --depths 0..10");
  ASSERT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("# optimal_depth\t3\n"), std::string::npos);
  const auto single = cli("tune-depth -g " + tune("callgraph.tsv") + " -s " + tune("stacks.jsonl") + " -p " +
                          tune("passing.jsonl") + " -t " + tune("ground_truth.json") + " --depths 5");
  EXPECT_NE(single.out.find("# optimal_depth\t5\n"), std::string::npos);
}

TEST_F(CliTest, SimulateIsDeterministicAndParses) {
  ASSERT_EQ(cli("simulate --out " + path("a") + " --entities 200 --faults 3 --seed 9").status, 0);
  ASSERT_EQ(cli("simulate --out " + path("b") + " --entities 200 --faults 3 --seed 9").status, 0);
  for (const char* f : {"callgraph.tsv", "stacks.jsonl", "passing.jsonl", "ground_truth.json"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  const auto r = cli("localize -g " + path("a/callgraph.tsv") + " -s " + path("a/stacks.jsonl") + " -p " +
                     path("a/passing.jsonl"));
  EXPECT_EQ(r.status, 0);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli("localize -g " + path("missing.tsv") + " -s x -p y").status, 2);
  EXPECT_EQ(cli("localize -g " + sample("callgraph.tsv") + " -s " + sample("stacks.jsonl") + " -p " +
                sample("passing.jsonl") + " --metric dstar")
                .status,
            2);
  std::ofstream(dir_ / "bad.tsv") << "a\tb\nbroken line\n";
  const auto bad = run_command(quote(kCli) + " expand -g " + path("bad.tsv") + " -s " + sample("stacks.jsonl") +
                               " 2>&1 >/dev/null");
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.out.find("bad.tsv:2:"), std::string::npos);
  std::ofstream(dir_ / "s.jsonl") << "{\"id\":\"x\",\"frames\":[\"nowhere\"]}\n";
  EXPECT_EQ(cli("expand -g " + sample("callgraph.tsv") + " -s " + path("s.jsonl")).status, 1);
  EXPECT_EQ(cli("bogus-subcommand").status, 2);
}
