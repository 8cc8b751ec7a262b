#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "recourse/experiment.hpp"
#include "recourse/json_io.hpp"
#include "test_util.hpp"

namespace recourse {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("recourse_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CliResult run(const std::string& args) const {
    const std::string err = path("stderr.txt");
    const std::string cmd = std::string("'") + RECOURSE_CLI + "' " + args + " 2>'" + err + "'";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  static std::string data(const std::string& name) { return "'" + testing::data_path(name) + "'"; }

  fs::path dir_;
};

TEST_F(CliTest, SolveCaseOne) {
  const auto r = run("solve " + data("queries/single_agent_case1.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = parse_json_text(r.out);
  EXPECT_EQ(j["status"], "recommendation");
  EXPECT_EQ(j["action_text"], "do(x1:=1)");
  EXPECT_EQ(rational_from_json(j["agents"][0]["factual"]), Rational(1));
  EXPECT_EQ(rational_from_json(j["agents"][0]["counterfactual"]), Rational(7, 2));
  EXPECT_EQ(rational_from_json(j["agents"][1]["counterfactual"]), Rational(7, 2));
  EXPECT_EQ(rational_from_json(j["welfare"]["factual"]), Rational(11));
  EXPECT_EQ(rational_from_json(j["welfare"]["counterfactual"]), Rational(7));
}

TEST_F(CliTest, SolveWritesOutputFile) {
  const auto r = run("solve " + data("queries/welfare_case2.json") + " -o '" + path("out.json") + "'");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto j = parse_json_text(slurp(path("out.json")));
  EXPECT_EQ(rational_from_json(j["welfare"]["counterfactual"]), Rational(11));
}

TEST_F(CliTest, SolveInfeasibleExitsTwo) {
  const auto r = run("solve " + data("queries/pareto_case1.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(parse_json_text(r.out)["status"], "no_feasible_recommendation");
}

TEST_F(CliTest, SolveAuditListsRows) {
  const auto r = run("solve --audit " + data("queries/pareto_case1.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(parse_json_text(r.out)["rows"].size(), 2u);
}

TEST_F(CliTest, SolveCfeBaseline) {
  const auto r = run("solve " + data("queries/cfe_baseline.json"));
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, MalformedQueryReportsLine) {
  write("bad.json", "{\n  \"matrix\": \"table1\",\n  \"principal\": 1,,\n}\n");
  const auto r = run("solve '" + path("bad.json") + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnknownMatrixIsError) {
  write("q.json", R"({"matrix": "table9", "principal": 1, "agents": {"1": "h1"},
                      "factual": {"x1": 0, "x2": 0}, "feasible": [{"x1": 1}]})");
  const auto r = run("solve '" + path("q.json") + "'");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("table9"), std::string::npos);
}

TEST_F(CliTest, BadArgumentsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("experiment --synthetic n=10 --mode pareto").code, 1);
  EXPECT_EQ(run("experiment --synthetic n=10 silent=3 --mode greedy").code, 1);
  EXPECT_EQ(run("generate --synthetic n=3 silent=4").code, 1);
}

TEST_F(CliTest, ExperimentSyntheticCounts) {
  const auto single = run("experiment --synthetic n=3294 silent=434 --matrix table2 --seed 1 --format json");
  ASSERT_EQ(single.code, 0) << single.err;
  const auto s = report_from_json(parse_json_text(single.out));
  EXPECT_EQ(s.all.recommendations_made, 434u);
  EXPECT_EQ(s.all.pareto_violated, 434u);
  EXPECT_EQ(s.all.welfare_decreased, 434u);

  const auto welfare = run("experiment --synthetic n=3294 silent=434 --mode social_welfare --format csv --jobs 4");
  ASSERT_EQ(welfare.code, 0) << welfare.err;
  const auto w = report_from_csv(welfare.out);
  EXPECT_EQ(w.all.recommendations_made, 2860u);
  EXPECT_EQ(w.all.principal_worsened, 2860u);

  const auto pareto = run("experiment --synthetic n=3294,silent=434 --mode pareto_and_welfare --format json");
  EXPECT_EQ(report_from_json(parse_json_text(pareto.out)).all.recommendations_made, 0u);
}

TEST_F(CliTest, ExperimentOnLogFilters) {
  const auto r = run("experiment " + data("sample_log.csv") + " --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = report_from_json(parse_json_text(r.out));
  EXPECT_EQ(rep.all.total_games, 3u);
  EXPECT_EQ(rep.games_filtered_out, 2u);
  EXPECT_NE(run("experiment " + data("sample_log.csv")).out.find("total_games"), std::string::npos);
}

TEST_F(CliTest, ExperimentWarnsWhenNothingRemains) {
  write("log.csv", game_log_header() + "\nx,table2,test,3/4,1,0,0\nx,table2,test,3/4,2,1,0\n");
  const auto r = run("experiment '" + path("log.csv") + "' --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(report_from_json(parse_json_text(r.out)).all.total_games, 0u);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, ExperimentCustomMatrixCsv) {
  write("log.csv", game_log_header() + "\nx,mine,test,0,1,0,1\n");
  const auto r = run("experiment '" + path("log.csv") + "' --matrix-csv mine=" + data("table2.matrix.csv") +
                     " --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(report_from_json(parse_json_text(r.out)).per_matrix.at("mine").recommendations_made, 1u);
}

TEST_F(CliTest, GenerateIsDeterministicAndParses) {
  const std::string args = "generate --synthetic n=200 silent=50 --matrix table2=0.5 --matrix table3=0.5 --seed 9";
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto games = parse_game_log(a.out);
  EXPECT_EQ(games.size(), 200u);
  EXPECT_NE(run("generate --synthetic n=200 silent=50 --seed 10").out, a.out);
}

TEST_F(CliTest, GraphOutputs) {
  const auto m = run("graph --matrix table1");
  ASSERT_EQ(m.code, 0) << m.err;
  std::size_t edges = 0;
  for (std::size_t pos = 0; (pos = m.out.find("->", pos)) != std::string::npos; ++pos) ++edges;
  EXPECT_EQ(edges, 4u);
  const auto f = run("graph " + data("pd_table1.scm.json"));
  EXPECT_EQ(f.out, m.out);
  const auto cyclic = run("graph " + data("cyclic.scm.json"));
  EXPECT_EQ(cyclic.code, 1);
  EXPECT_NE(cyclic.err.find("cycle"), std::string::npos) << cyclic.err;
}

TEST_F(CliTest, OutputDirectoryVariable) {
  const std::string cmd = "RECOURSE_OUTPUT_DIR='" + dir_.string() + "' '" + RECOURSE_CLI +
                          "' graph --matrix table2 -o g.dot";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_NE(slurp(path("g.dot")).find("digraph"), std::string::npos);
}

}  // namespace
}  // namespace recourse
