#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "cabench/cli.hpp"
#include "cabench/io.hpp"
#include "test_support.hpp"

using namespace cabench;
using namespace cabench::test;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
  void SetUp() override { unsetenv("CABENCH_OUT"); }

  std::string dir(const std::string& name) const { return (tmp / name).string(); }

  void smoke_dataset(const std::string& name, const std::string& seed = "1") {
    const CliResult r = cli({"gen-ca", "--n-train", "200", "--n-test", "100", "--seed", seed, "--out", dir(name)});
    ASSERT_EQ(r.code, 0) << r.err;
  }

  TempDir tmp;
};

}  // namespace

TEST_F(Cli, HelpListsSubcommandsAndExitsZero) {
  const CliResult r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"gen-ca", "emit-tasks", "oracle-eval", "score", "gen-groupmul", "score-groupmul"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
  const CliResult g = cli({"gen-ca", "--help"});
  EXPECT_EQ(g.code, 0);
  for (const char* flag : {"--preset", "--w", "--r", "--t", "--n-train", "--n-test", "--seed", "--workers", "--out",
                           "--dedup-train", "--context"}) {
    EXPECT_NE(g.out.find(flag), std::string::npos) << flag;
  }
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"gen-ca", "--w", "8", "--out", dir("x")}).code, 2);  // no seed
  EXPECT_EQ(cli({"gen-ca", "--seed", "1", "--bogus", "--out", dir("x")}).code, 2);
  EXPECT_EQ(cli({"gen-ca", "--seed", "1", "--n-train", "ten", "--out", dir("x")}).code, 2);
  EXPECT_EQ(cli({"gen-ca", "--seed", "1", "--n-test", "1"}).code, 2);  // no output location
  EXPECT_EQ(cli({"emit-tasks", dir("x"), "--variant", "xy"}).code, 2);
  EXPECT_EQ(cli({"gen-groupmul", "--group", "Z60", "--out", dir("g")}).code, 2);
  EXPECT_FALSE(std::filesystem::exists(tmp / "x"));
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  const CliResult missing = cli({"score", dir("nope.jsonl"), "--gold", dir("gold.jsonl")});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("jsonl"), std::string::npos);
  EXPECT_EQ(cli({"emit-tasks", dir("absent")}).code, 1);
  EXPECT_EQ(cli({"gen-ca", "--seed", "1", "--w", "3", "--out", dir("narrow")}).code, 1);
}

TEST_F(Cli, GenCaSmokeAndIdempotence) {
  ASSERT_EQ(cli({"gen-ca", "--w", "8", "--r", "1", "--n-train", "100", "--n-test", "10", "--seed", "1", "--out",
                 dir("a"), "--workers", "1"})
                .code,
            0);
  ASSERT_EQ(cli({"gen-ca", "--w", "8", "--r", "1", "--n-train", "100", "--n-test", "10", "--seed", "1", "--out",
                 dir("b"), "--workers", "3"})
                .code,
            0);
  for (const char* f : {"train.jsonl", "test.jsonl", "manifest.json"}) {
    EXPECT_EQ(read_file(tmp / "a" / f), read_file(tmp / "b" / f)) << f;
  }
  const auto m = read_json_file(tmp / "a" / "manifest.json");
  EXPECT_EQ(m["config"]["W"], 8);
  EXPECT_EQ(m["config"]["n_train"], 100);
  EXPECT_EQ(m["run"]["subcommand"], "gen-ca");
  EXPECT_EQ(m["run"]["seed"], 1);
}

TEST_F(Cli, OutputRootFromEnvironment) {
  setenv("CABENCH_OUT", tmp.path().c_str(), 1);
  const CliResult r = cli({"gen-ca", "--n-train", "5", "--n-test", "5", "--seed", "2"});
  unsetenv("CABENCH_OUT");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(tmp / "gen-ca" / "manifest.json"));
}

TEST_F(Cli, EmitTasksWritesRecordsAndVocab) {
  smoke_dataset("ds");
  const CliResult r = cli({"emit-tasks", dir("ds"), "--variant", "oo", "--k", "1,4", "--out", dir("tasks")});
  ASSERT_EQ(r.code, 0) << r.err;
  int lines = 0;
  for_each_line(tmp / "tasks" / "test_oo_k4.jsonl", [&](std::string_view text, std::size_t) {
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j["target"].get<std::string>().size(), 4 * 20 + 3 * 5);
    ++lines;
  });
  EXPECT_EQ(lines, 100);
  EXPECT_TRUE(std::filesystem::exists(tmp / "tasks" / "test_oo_k1.jsonl"));
  const auto m = read_json_file(tmp / "tasks" / "manifest.json");
  EXPECT_EQ(m["vocab"]["<gen>"], 3);
  EXPECT_EQ(m["outputs"].size(), 2u);
  EXPECT_EQ(m["subcommand"], "emit-tasks");
  EXPECT_EQ(m["tool_version"].get<std::string>().empty(), false);
}

TEST_F(Cli, EmitRawGoldenLine) {
  write_text_file(tmp / "golden.jsonl", format_instance(golden_instance()) + "\n");
  const CliResult r = cli({"emit-tasks", dir("golden.jsonl"), "--variant", "os", "--raw", "--out", dir("raw")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = golden_lines();
  EXPECT_EQ(read_file(tmp / "raw" / "test_os_k1.txt"), lines.at("os").first + lines.at("os").second + "\n");
}

TEST_F(Cli, MultiHorizonShiftFormat) {
  write_text_file(tmp / "golden.jsonl", format_instance(golden_instance()) + "\n");
  ASSERT_EQ(cli({"emit-tasks", dir("golden.jsonl"), "--variant", "multi", "--k", "3", "--out", dir("m")}).code, 0);
  std::string line;
  for_each_line(tmp / "m" / "test_multi_k3.jsonl", [&](std::string_view t, std::size_t) { line = t; });
  const auto j = nlohmann::json::parse(line);
  const std::string input = j["input"];
  EXPECT_EQ(input.substr(input.size() - 14), "<shift_3><gen>");
  EXPECT_EQ(j["target"], kGoldenOdd);
}

TEST_F(Cli, OracleThenScoreSelfConsistency) {
  smoke_dataset("ds");
  ASSERT_EQ(cli({"emit-tasks", dir("ds"), "--variant", "os", "--k", "2", "--out", dir("tasks")}).code, 0);
  const CliResult o = cli({"oracle-eval", dir("ds"), "--variant", "os", "--predictions", "--pred-k", "2", "--out",
                     dir("oracle"), "--workers", "2"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto ceiling = read_json_file(tmp / "oracle" / "ceiling.json");
  const CliResult s = cli({"score", dir("oracle/oracle_os_k2.jsonl"), "--gold", dir("tasks/test_os_k2.jsonl"),
                     "--oracle", dir("oracle/ceiling.json"), "--json", "--out", dir("score")});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto report = nlohmann::json::parse(s.out);
  double strict_k2 = -1;
  for (const auto& row : ceiling["rows"]) {
    if (row["k"] == 2) strict_k2 = row["strict"];
  }
  EXPECT_DOUBLE_EQ(report["cells"][0]["exact_match"].get<double>(), strict_k2);
  EXPECT_TRUE(std::filesystem::exists(tmp / "score" / "manifest.json"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "oracle" / "manifest.json"));
}

TEST_F(Cli, OracleContextOneIsZero) {
  smoke_dataset("ds");
  const CliResult o = cli({"oracle-eval", dir("ds"), "--context", "1", "--json"});
  ASSERT_EQ(o.code, 0) << o.err;
  for (const auto& row : nlohmann::json::parse(o.out)["rows"]) EXPECT_EQ(row["strict"], 0.0);
}

TEST_F(Cli, ScoreSeveralFilesReportsMeanAndStd) {
  smoke_dataset("ds");
  ASSERT_EQ(cli({"emit-tasks", dir("ds"), "--variant", "os", "--k", "1", "--out", dir("tasks")}).code, 0);
  std::vector<std::string> preds;
  int i = 0;
  for (const char* undetermined : {"mask", "zero", "mask"}) {
    const std::string out = dir("o" + std::to_string(i++));
    ASSERT_EQ(cli({"oracle-eval", dir("ds"), "--predictions", "--pred-k", "1", "--undetermined", undetermined,
                   "--out", out})
                  .code,
              0);
    preds.push_back(out + "/oracle_os_k1.jsonl");
  }
  std::vector<std::string> args{"score"};
  args.insert(args.end(), preds.begin(), preds.end());
  args.insert(args.end(), {"--gold", dir("tasks/test_os_k1.jsonl"), "--json"});
  const CliResult s = cli(args);
  ASSERT_EQ(s.code, 0) << s.err;
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j["runs"].size(), 3u);
  EXPECT_EQ(j["aggregate"]["exact_match"][0]["runs"], 3);
  EXPECT_TRUE(j["aggregate"]["exact_match"][0].contains("std"));
  const CliResult table = cli({"score", preds[0], preds[1], "--gold", dir("tasks/test_os_k1.jsonl")});
  EXPECT_NE(table.out.find("aggregate over 2 runs"), std::string::npos);
}

TEST_F(Cli, GoldAsPredictionScoresOne) {
  smoke_dataset("ds");
  ASSERT_EQ(cli({"emit-tasks", dir("ds"), "--variant", "ors", "--k", "3", "--out", dir("tasks")}).code, 0);
  std::string preds;
  for_each_line(tmp / "tasks" / "test_ors_k3.jsonl", [&](std::string_view t, std::size_t) {
    const auto j = nlohmann::json::parse(t);
    preds += nlohmann::json{{"instance_id", j["instance_id"]}, {"variant", "ors"}, {"k", 3}, {"tokens", j["target"]}}
                 .dump() +
             "\n";
  });
  write_text_file(tmp / "pred.jsonl", preds);
  const CliResult s = cli({"score", dir("pred.jsonl"), "--gold", dir("tasks/test_ors_k3.jsonl"), "--json"});
  ASSERT_EQ(s.code, 0) << s.err;
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j["cells"][0]["exact_match"], 1.0);
  EXPECT_EQ(j["cells"][0]["rule_bit_accuracy"], 1.0);
}

TEST_F(Cli, GroupmulRoundTrip) {
  const CliResult g = cli({"gen-groupmul", "--group", "A5", "--lengths", "5,40", "--n", "50", "--seed", "4", "--out",
                     dir("g1")});
  ASSERT_EQ(g.code, 0) << g.err;
  ASSERT_EQ(cli({"gen-groupmul", "--group", "A5", "--lengths", "5,40", "--n", "50", "--seed", "4", "--out",
                 dir("g2"), "--workers", "2"})
                .code,
            0);
  EXPECT_EQ(read_file(tmp / "g1" / "samples.jsonl"), read_file(tmp / "g2" / "samples.jsonl"));
  EXPECT_EQ(read_file(tmp / "g1" / "manifest.json"), read_file(tmp / "g2" / "manifest.json"));
  const CliResult s = cli({"score-groupmul", dir("g1/samples.jsonl"), dir("g1/samples.jsonl"), "--json"});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(nlohmann::json::parse(s.out)["overall"]["position_accuracy"], 1.0);
  EXPECT_EQ(cli({"gen-groupmul", "--group", "S4", "--seed", "1", "--out", dir("g3")}).code, 2);
}

TEST_F(Cli, EveryOutputDirectoryHasOneManifest) {
  smoke_dataset("ds");
  ASSERT_EQ(cli({"emit-tasks", dir("ds"), "--out", dir("tasks")}).code, 0);
  ASSERT_EQ(cli({"oracle-eval", dir("ds"), "--out", dir("oracle")}).code, 0);
  ASSERT_EQ(cli({"gen-groupmul", "--group", "Z60", "--n", "3", "--seed", "1", "--out", dir("g")}).code, 0);
  for (const char* d : {"ds", "tasks", "oracle", "g"}) {
    int manifests = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp / d)) {
      manifests += e.path().filename().string().find("manifest") != std::string::npos;
    }
    EXPECT_EQ(manifests, 1) << d;
  }
}
